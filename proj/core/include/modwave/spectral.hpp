#pragma once

#include "modwave/common.hpp"

#include <limits>

namespace modwave {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// Angular wavenumbers of an n-point periodic grid over [0, length) in FFT
// order. The Nyquist entry is kept; odd derivatives zero it separately.
Vec wavenumbers(int n, double length);

Vec derivative(const Vec& f, double length, int order = 1);
Field derivative(const Field& f, double length, int order = 1);

// Exact band-limited translate g(x) = f(x + shift) on a periodic grid.
Field translate(const Field& f, double length, double shift);

Vec pointwise_norm(const Field& f);

// Rectangle-rule L^p norm of the pointwise Euclidean norm; p = inf gives
// the grid maximum.
double lp_norm(const Field& f, double h, double p);
double lp_norm(const Vec& f, double h, double p);

// sqrt(sum_{j<=K} ||d^j f||_{L^2}^2), derivatives taken spectrally.
double hk_norm(const Field& f, double length, int K);
double hk_norm(const Vec& f, double length, int K);
double l1_hk_norm(const Field& f, double length, int K);
double l1_hk_norm(const Vec& f, double length, int K);

// Largest value within one period of the domain edge divided by the global
// maximum; 0 for an identically zero field or when the edge values do not
// exceed `floor` (an absolute round-off level).
double boundary_ratio(const Field& f, const Grid& grid, double floor = 0.0);
double boundary_ratio(const Vec& f, const Grid& grid, double floor = 0.0);

// Spectral resampling of one period of samples to a different point count.
Field resample_periodic(const Field& f, int points);

// Local Lagrange interpolation on a uniform periodic grid.
class PeriodicInterpolator {
 public:
  explicit PeriodicInterpolator(int stencil = 12);
  // `pos` is measured in grid-index units; data has length n.
  double operator()(const double* data, int n, double pos) const;

 private:
  int stencil_;
  Vec bary_;
};

}  // namespace modwave

namespace modwave {

// Fourier coefficients of one period of samples, stacked component-major with
// modes j = -M/2 .. M/2-1: entry c*M + (j + M/2) holds (1/M) sum_i u_c(x_i) e^{-2 pi i j x_i}.
CVec mode_coefficients(const Field& periodic);
CVec mode_coefficients(const CField& periodic);

// Inverse of mode_coefficients (complex samples on M points per component).
CField mode_synthesis(const CVec& coeffs, int components, int M);

}  // namespace modwave
