#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace swlab {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;

// Error taxonomy; CLI maps these to exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ToleranceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LeakageError : ToleranceError {
  using ToleranceError::ToleranceError;
};
struct StepUnderflowError : ToleranceError {
  using ToleranceError::ToleranceError;
};
struct TruncationError : ConfigError {
  using ConfigError::ConfigError;
};

// Compensated (Kahan) accumulator; merge order of partial norms must not
// matter beyond floating point addition order.
class KahanSum {
 public:
  void add(double x) {
    double y = x - carry_;
    double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace swlab
