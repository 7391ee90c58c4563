// Acceptance driver: `survband_acceptance [n]` runs criterion n (all if
// omitted) and prints one PASS/FAIL line per criterion.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "criteria.hpp"

int main(int argc, char** argv) {
  int first = 1;
  int last = acceptance::kCriteria;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > acceptance::kCriteria) {
      std::fprintf(stderr, "usage: %s [1..%d]\n", argv[0], acceptance::kCriteria);
      return 2;
    }
    first = last = n;
  }
  bool all = true;
  for (int n = first; n <= last; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    acceptance::Verdict v;
    try {
      v = acceptance::run(n, argc, argv);
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("acceptance %d %s: %s | %s (%.1fs)\n", n, v.pass ? "PASS" : "FAIL",
                acceptance::title(n), v.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
