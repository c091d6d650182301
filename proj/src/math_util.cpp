#include "biotcrb/math_util.hpp"

#include <limits>

namespace biotcrb {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double halton(uint64_t index, unsigned base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

uint64_t saturating_pow(uint64_t base, unsigned exp) {
  const uint64_t limit = std::numeric_limits<uint64_t>::max();
  uint64_t result = 1;
  for (unsigned i = 0; i < exp; ++i) {
    if (base != 0 && result > limit / base) return limit;
    result *= base;
  }
  return result;
}

}  // namespace biotcrb
