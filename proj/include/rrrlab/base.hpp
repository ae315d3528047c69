// rrrlab: shared aliases, deterministic RNG, small numeric helpers.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrrlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Cplx = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec vec1(double a) { return make_vec({a}); }
inline Vec vec2(double a, double b) { return make_vec({a, b}); }
inline Vec vec3(double a, double b, double c) { return make_vec({a, b, c}); }

// Deterministic across platforms: mantissa built from the raw 64-bit stream,
// never through uniform_real_distribution (whose output is unspecified).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // standard normal via Box-Muller on the deterministic uniforms
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t raw() { return gen_(); }

  int uniform_int(int lo, int hi) {  // inclusive range, small spans only
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 gen_;
};

inline double sq(double x) { return x * x; }

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

// ordinary least squares y = a + b x with R^2
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw std::invalid_argument("fit_line: degenerate abscissae");
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  f.n = x.size();
  const double mean_y = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += sq(y[i] - (f.intercept + f.slope * x[i]));
    ss_tot += sq(y[i] - mean_y);
  }
  f.r2 = (ss_tot <= 1e-300) ? 1.0 : 1.0 - ss_res / ss_tot;
  return f;
}

}  // namespace rrrlab
