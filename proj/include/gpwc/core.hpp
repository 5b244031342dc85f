#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gpwc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error hierarchy. Every failure the library reports derives from Error so
// front ends can catch one type and still print the specific kind.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), detail_(what) {}
  const std::string& kind() const noexcept { return kind_; }
  // message without the kind prefix
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string kind_;
  std::string detail_;
};

#define GPWC_DEFINE_ERROR(Name)                                        \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  };

GPWC_DEFINE_ERROR(NotPositiveDefinite)
GPWC_DEFINE_ERROR(OutOfChart)
GPWC_DEFINE_ERROR(EigFailure)
GPWC_DEFINE_ERROR(InvalidInit)
GPWC_DEFINE_ERROR(OutOfRange)
GPWC_DEFINE_ERROR(NotABlowup)
GPWC_DEFINE_ERROR(HypothesisViolated)
GPWC_DEFINE_ERROR(ParseError)
GPWC_DEFINE_ERROR(ValidationError)

#undef GPWC_DEFINE_ERROR

inline constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

// Central-difference step for first derivatives: cbrt(eps) * max(1, |x|).
inline double fd_step(double x) {
  static const double base = std::cbrt(kMachineEps);
  return base * std::max(1.0, std::abs(x));
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace gpwc
