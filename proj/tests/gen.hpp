#pragma once

// Tiny seeded generator for property tests.

#include <cstdint>
#include <vector>

namespace testgen {

struct SplitMix {
  std::uint64_t s;
  explicit SplitMix(std::uint64_t seed) : s(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // uniform in [lo, hi]
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + next() % (hi - lo + 1); }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Random points in [0, 1); sometimes snapped to a coarse grid to force ties.
  std::vector<double> points(std::size_t n) {
    std::vector<double> v(n);
    const bool coarse = next() % 4 == 0;
    for (auto& x : v) x = coarse ? static_cast<double>(range(0, 15)) / 16.0 : unit();
    return v;
  }
};

}  // namespace testgen
