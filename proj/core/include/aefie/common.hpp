#ifndef AEFIE_COMMON_HPP_
#define AEFIE_COMMON_HPP_

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace aefie {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEpsilon0 = 8.8541878128e-12;  // F/m
inline constexpr double kMu0 = 4.0 * kPi * 1e-7;       // H/m
inline constexpr Complex kImag{0.0, 1.0};

/// Invalid user input: malformed files, inconsistent dimensions, bad config.
/// Drivers translate this into exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure during a run: singular factorization, residual blow-up.
/// Drivers translate this into exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Homogeneous background medium.
struct Medium {
  double epsilon = kEpsilon0;  // F/m
  double mu = kMu0;            // H/m
};

inline double angular_frequency(double f_hz) { return 2.0 * kPi * f_hz; }

/// Wavenumber kappa = omega sqrt(eps mu); zero frequency is a valid input.
inline double wavenumber(double f_hz, const Medium& medium) {
  return angular_frequency(f_hz) * std::sqrt(medium.epsilon * medium.mu);
}

}  // namespace aefie

#endif  // AEFIE_COMMON_HPP_
