#include "flowhold/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <string>

#include "flowhold/errors.hpp"

namespace flowhold {

double hold_diameter_cm(double two_sigma_radial_cm, double frame_size_cm) {
  return frame_size_cm + 2.0 * two_sigma_radial_cm;
}

DispersionReport dispersion_stats(const std::vector<FrameRecord>& records, double settle_time,
                                  double frame_size_cm) {
  std::vector<const FrameRecord*> used;
  for (const auto& r : records) {
    if (r.t >= settle_time) used.push_back(&r);
  }
  if (used.size() < 2) {
    throw ArgumentError("dispersion_stats: need at least 2 records after settle time, got " +
                        std::to_string(used.size()));
  }
  const double n = static_cast<double>(used.size());
  DispersionReport rep;
  // Sums run relative to the first sample, so a constant track is exactly
  // zero-variance.
  const double x0 = used.front()->pos_x;
  const double y0 = used.front()->pos_y;
  double off_x = 0.0;
  double off_y = 0.0;
  size_t blind = 0;
  for (const auto* r : used) {
    off_x += r->pos_x - x0;
    off_y += r->pos_y - y0;
    if (r->events.blind) ++blind;
  }
  off_x /= n;
  off_y /= n;
  rep.mean_x = x0 + off_x;
  rep.mean_y = y0 + off_y;
  double var_x = 0.0;
  double var_y = 0.0;
  double max_r2 = 0.0;
  for (const auto* r : used) {
    const double dx = (r->pos_x - x0) - off_x;
    const double dy = (r->pos_y - y0) - off_y;
    var_x += dx * dx;
    var_y += dy * dy;
    max_r2 = std::max(max_r2, dx * dx + dy * dy);
  }
  rep.std_x = std::sqrt(var_x / n);
  rep.std_y = std::sqrt(var_y / n);
  rep.two_sigma_radial = 2.0 * std::sqrt(rep.std_x * rep.std_x + rep.std_y * rep.std_y) * 100.0;
  rep.max_excursion = std::sqrt(max_r2) * 100.0;
  rep.hold_diameter = hold_diameter_cm(rep.two_sigma_radial, frame_size_cm);
  rep.settle_time_used = settle_time;
  rep.blind_fraction = static_cast<double>(blind) / n;
  return rep;
}

namespace {

void append_number(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, static_cast<size_t>(n));
}

std::string events_cell(const EventFlags& e) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ';';
    s += name;
  };
  add(e.reacquired, "reacquired");
  add(e.feature_lost, "feature_lost");
  add(e.blind, "blind");
  return s;
}

const char* const kColumns[] = {"t",       "pos_x",     "pos_y",    "vel_x",   "vel_y",
                                "disp_x",  "disp_y",    "disp_d",   "cmd_roll", "cmd_pitch",
                                "n_alive", "generation", "events"};

[[noreturn]] void fail(size_t row, size_t col, const std::string& what) {
  const std::string field = col < 13 ? kColumns[col] : "row";
  throw ParseError(field, "row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                              " (" + field + "): " + what);
}

double parse_double(std::string_view cell, size_t row, size_t col) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    fail(row, col, "expected a number, got '" + std::string(cell) + "'");
  }
  return v;
}

int parse_int(std::string_view cell, size_t row, size_t col) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    fail(row, col, "expected an integer, got '" + std::string(cell) + "'");
  }
  return v;
}

}  // namespace

std::string write_csv(const std::vector<FrameRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    append_number(out, r.t);
    for (double v : {r.pos_x, r.pos_y, r.vel_x, r.vel_y}) {
      out += ',';
      append_number(out, v);
    }
    for (const auto& v : {r.disp_x, r.disp_y, r.disp_d}) {
      out += ',';
      if (v) append_number(out, *v);
    }
    out += ',';
    append_number(out, r.cmd_roll);
    out += ',';
    append_number(out, r.cmd_pitch);
    out += ',' + std::to_string(r.n_alive) + ',' + std::to_string(r.generation) + ',';
    out += events_cell(r.events);
    out += '\n';
  }
  return out;
}

std::vector<FrameRecord> read_csv(std::string_view text) {
  std::vector<FrameRecord> records;
  size_t row = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++row;
    if (row == 1) {
      if (line != kCsvHeader) {
        throw ParseError("header", "row 1: header does not match telemetry schema");
      }
      continue;
    }
    if (line.empty() && pos >= text.size()) break;

    std::vector<std::string_view> cells;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (cells.size() != 13) {
      throw ParseError("row", "row " + std::to_string(row) + ": expected 13 fields, got " +
                                  std::to_string(cells.size()));
    }

    FrameRecord r;
    r.t = parse_double(cells[0], row, 0);
    r.pos_x = parse_double(cells[1], row, 1);
    r.pos_y = parse_double(cells[2], row, 2);
    r.vel_x = parse_double(cells[3], row, 3);
    r.vel_y = parse_double(cells[4], row, 4);
    const bool has_disp = !cells[5].empty();
    if (has_disp != !cells[6].empty() || has_disp != !cells[7].empty()) {
      fail(row, 5, "displacement cells must be all present or all empty");
    }
    if (has_disp) {
      r.disp_x = parse_double(cells[5], row, 5);
      r.disp_y = parse_double(cells[6], row, 6);
      r.disp_d = parse_double(cells[7], row, 7);
    }
    r.cmd_roll = parse_double(cells[8], row, 8);
    r.cmd_pitch = parse_double(cells[9], row, 9);
    r.n_alive = parse_int(cells[10], row, 10);
    r.generation = parse_int(cells[11], row, 11);
    std::string_view ev = cells[12];
    while (!ev.empty()) {
      const size_t semi = ev.find(';');
      const std::string_view name = ev.substr(0, semi);
      if (name == "reacquired") r.events.reacquired = true;
      else if (name == "feature_lost") r.events.feature_lost = true;
      else if (name == "blind") r.events.blind = true;
      else fail(row, 12, "unknown event '" + std::string(name) + "'");
      if (semi == std::string_view::npos) break;
      ev.remove_prefix(semi + 1);
    }
    if (!records.empty() && !(r.t > records.back().t)) {
      fail(row, 0, "t must be strictly increasing");
    }
    records.push_back(r);
  }
  if (row == 0) throw ParseError("header", "row 1: missing header");
  return records;
}

std::string write_summary_json(const DispersionReport& report, const ConfigDigest& digest) {
  nlohmann::ordered_json j;
  j["preset"] = digest.preset;
  j["seeds"] = {{"texture", digest.texture_seed},
                {"wind", digest.wind_seed},
                {"noise", digest.noise_seed}};
  j["mean_x"] = report.mean_x;
  j["mean_y"] = report.mean_y;
  j["std_x"] = report.std_x;
  j["std_y"] = report.std_y;
  j["two_sigma_radial"] = report.two_sigma_radial;
  j["max_excursion"] = report.max_excursion;
  j["hold_diameter"] = report.hold_diameter;
  j["settle_time_used"] = report.settle_time_used;
  j["blind_fraction"] = report.blind_fraction;
  return j.dump(2) + "\n";
}

}  // namespace flowhold
