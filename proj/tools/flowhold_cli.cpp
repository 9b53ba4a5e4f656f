#include <iostream>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "flowhold/cli.hpp"

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Frame-sized buffers are allocated every tick; keep them on the heap
  // instead of fresh mmap pages.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  std::vector<std::string> args(argv + 1, argv + argc);
  return flowhold::run_cli(args, std::cout, std::cerr);
}
