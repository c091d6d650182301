#pragma once

#include <cmath>
#include <cstdint>

namespace biotcrb {

// Neumaier-compensated accumulator; long reductions over the outcome space
// must not lose mass to rounding.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double normal_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

// erfc keeps full relative precision in both tails.
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * M_SQRT1_2);
}

// SplitMix64 step; used to derive independent per-trial seeds.
uint64_t splitmix64(uint64_t x);

// Radical-inverse (Halton) low-discrepancy point, index >= 1.
double halton(uint64_t index, unsigned base);

// |O|^k with saturation at 2^63-1 so cap comparisons never overflow.
uint64_t saturating_pow(uint64_t base, unsigned exp);

}  // namespace biotcrb
