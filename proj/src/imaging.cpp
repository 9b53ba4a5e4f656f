#include "flowhold/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "flowhold/errors.hpp"

namespace flowhold {

Raster::Raster(int w, int h, double fill)
    : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

GrayImage::GrayImage(int width, int height, std::vector<double> data) {
  if (width <= 0 || height <= 0) {
    throw SizeError("image dimensions must be positive");
  }
  if (data.size() != static_cast<size_t>(width) * height) {
    throw SizeError("image data length " + std::to_string(data.size()) +
                    " does not match " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw RangeError("image intensity outside [0,1]");
    }
  }
  raster_.width = width;
  raster_.height = height;
  raster_.data = std::move(data);
}

GrayImage GrayImage::filled(int width, int height, double value) {
  return GrayImage(width, height,
                   std::vector<double>(static_cast<size_t>(std::max(width, 0)) *
                                           std::max(height, 0),
                                       value));
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_int(const char* field) {
    skip_space_and_comments();
    long value = 0;
    size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) {
        throw ParseError(field, std::string("PGM ") + field + " too large");
      }
      ++pos_;
      ++digits;
    }
    if (digits == 0) {
      throw ParseError(field, std::string("PGM ") + field + " missing or not a number");
    }
    return value;
  }

  size_t pos() const { return pos_; }
  void advance(size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace

GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError("magic", "PGM magic must be \"P5\"");
  }
  HeaderReader reader(bytes);
  reader.advance(2);
  const long width = reader.read_int("width");
  const long height = reader.read_int("height");
  if (width <= 0) throw ParseError("width", "PGM width must be positive");
  if (height <= 0) throw ParseError("height", "PGM height must be positive");
  const long maxval = reader.read_int("maxval");
  if (maxval < 1 || maxval > 255) {
    throw ParseError("maxval", "PGM maxval " + std::to_string(maxval) +
                                   " outside [1,255]");
  }
  // Exactly one whitespace byte separates the header from the payload.
  if (reader.pos() >= bytes.size() || !std::isspace(bytes[reader.pos()])) {
    throw ParseError("payload", "PGM header not terminated by whitespace");
  }
  reader.advance(1);

  const size_t need = static_cast<size_t>(width) * static_cast<size_t>(height);
  const size_t have = bytes.size() - reader.pos();
  if (have < need) {
    throw ParseError("payload", "PGM payload truncated: expected " +
                                    std::to_string(need) + " bytes, got " +
                                    std::to_string(have));
  }
  std::vector<double> data(need);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (size_t i = 0; i < need; ++i) {
    const double v = bytes[reader.pos() + i] * scale;
    // Raw bytes above maxval are clamped rather than rejected.
    data[i] = std::min(v, 1.0);
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

std::vector<std::uint8_t> save_pgm(const GrayImage& image) {
  const std::string header = "P5\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.pixels().size());
  for (double v : image.pixels()) {
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

GrayImage read_pgm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_pgm(bytes);
}

void write_pgm_file(const std::string& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const auto bytes = save_pgm(image);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

double sample_bilinear(const Raster& raster, double x, double y) {
  if (!(x >= 0.0 && y >= 0.0 && x <= raster.width - 1 && y <= raster.height - 1)) {
    std::ostringstream msg;
    msg << "bilinear sample (" << x << ", " << y << ") outside " << raster.width
        << "x" << raster.height << " raster";
    throw RangeError(msg.str());
  }
  return sample_bilinear_unchecked(raster, x, y);
}

double sample_bilinear(const GrayImage& image, double x, double y) {
  return sample_bilinear(image.raster(), x, y);
}

namespace detail {

GradientField sobel_unchecked(const Raster& img) {
  const int w = img.width;
  const int h = img.height;
  GradientField g{Raster(w, h), Raster(w, h)};
  // Separable: smooth-then-difference per row, using edge-replicated columns.
  std::vector<double> smooth(static_cast<size_t>(w) + 2);
  std::vector<double> diff(static_cast<size_t>(w) + 2);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    const double* rm = &img.data[static_cast<size_t>(ym) * w];
    const double* r0 = &img.data[static_cast<size_t>(y) * w];
    const double* rp = &img.data[static_cast<size_t>(yp) * w];
    for (int x = 0; x < w; ++x) {
      smooth[x + 1] = rm[x] + 2.0 * r0[x] + rp[x];
      diff[x + 1] = rp[x] - rm[x];
    }
    smooth[0] = smooth[1];
    diff[0] = diff[1];
    smooth[w + 1] = smooth[w];
    diff[w + 1] = diff[w];
    double* gx = &g.ix.data[static_cast<size_t>(y) * w];
    double* gy = &g.iy.data[static_cast<size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      gx[x] = (smooth[x + 2] - smooth[x]) * 0.125;
      gy[x] = (diff[x] + 2.0 * diff[x + 1] + diff[x + 2]) * 0.125;
    }
  }
  return g;
}

}  // namespace detail

GradientField sobel_gradients(const GrayImage& image) {
  if (image.width() < 3 || image.height() < 3) {
    throw SizeError("sobel_gradients needs at least a 3x3 image");
  }
  return detail::sobel_unchecked(image.raster());
}

}  // namespace flowhold
