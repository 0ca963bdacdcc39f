#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace bbm {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

// Relative-or-absolute closeness used for tie detection between objective
// values. Two sums that agree to ~1e-12 are treated as equal and the
// deterministic tie-break decides.
inline double tie_tolerance(double reference) noexcept {
  return 1e-12 * std::max(1.0, std::abs(reference));
}

inline std::size_t ipow(std::size_t base, int exp) noexcept {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace bbm
