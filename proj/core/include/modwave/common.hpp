#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace modwave {

using cplx = std::complex<double>;

// Grid functions store one column per component and one row per grid point.
using Field = Eigen::MatrixXd;
using CField = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

class Error : public std::runtime_error {
 public:
  Error(const std::string& kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(kind) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define MODWAVE_ERROR(Name)                                     \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

MODWAVE_ERROR(InvalidParameter)
MODWAVE_ERROR(SizeMismatch)
MODWAVE_ERROR(NoConvergence)
MODWAVE_ERROR(SingularJacobian)
MODWAVE_ERROR(StabilityViolation)
MODWAVE_ERROR(SimplicityViolation)
MODWAVE_ERROR(PreconditionViolation)
MODWAVE_ERROR(BoundaryContamination)
MODWAVE_ERROR(MapNotInvertible)
MODWAVE_ERROR(Blowup)
MODWAVE_ERROR(PhaseSlip)
MODWAVE_ERROR(IterationDiverges)
MODWAVE_ERROR(BandEscape)
MODWAVE_ERROR(UnstableFamilyMember)
MODWAVE_ERROR(ConfigError)

#undef MODWAVE_ERROR

// Uniform grid over `periods` unit periods with `points` samples per period.
struct Grid {
  int periods = 1;
  int points = 64;

  int size() const { return periods * points; }
  double h() const { return 1.0 / points; }
  double length() const { return static_cast<double>(periods); }
  double x(int i) const { return i * h(); }
  Vec coordinates() const { return Vec::LinSpaced(size(), 0.0, (size() - 1) * h()); }

  void validate() const;
};

bool is_power_of_two(int n);

}  // namespace modwave

#include <functional>

namespace modwave {

// Runs fn(i) for i in [0, count) on up to `jobs` threads (0 = hardware).
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace modwave
