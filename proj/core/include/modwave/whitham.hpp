#pragma once

#include "modwave/bloch.hpp"
#include "modwave/common.hpp"
#include "modwave/dynamics.hpp"
#include "modwave/profile.hpp"

#include <vector>

namespace modwave {

// Natural cubic spline through tabulated nodes.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

 private:
  int segment(double x) const;
  std::vector<double> x_, y_, m_;  // m_ holds second derivatives at nodes
  double step_ = 0.0;
  bool uniform_ = false;
};

// Coefficients of k_t = d_y[c_* k + omega(k) + k_* (d(k)/k) k_y] written in the
// co-moving, period-normalized frame of the base wave (time in the same units
// as the generator).
struct WhithamCoefficients {
  double k_star = 0.0;
  double c_star = 0.0;
  std::vector<double> k, omega, d;
  CubicSpline omega_spline, d_spline;

  double omega_at(double K) const { return omega_spline(K); }
  double omega_prime(double K) const { return omega_spline.derivative(K); }
  double d_at(double K) const { return d_spline(K); }
  double k_min() const { return k.front(); }
  double k_max() const { return k.back(); }
  // Linearized drift c_* + omega'(k_*).
  double drift() const { return c_star + omega_prime(k_star); }
};

WhithamCoefficients extract_coefficients(const ProfileFamily& family, const std::vector<SpectralSummary>& summaries);
// Runs the spectral scan of every family member first.
WhithamCoefficients extract_coefficients(const ProfileFamily& family, int xi_count = 64, int jobs = 0);

struct WhithamState {
  double t = 0.0;
  Vec k_field;
};

struct WhithamOptions {
  int points_per_period = 16;
  double dt = 0.0;  // 0 picks a stable step automatically
  bool frozen_d = false;
  std::vector<double> output_times;
};

// Stable explicit step for the given slow grid.
double whitham_stable_dt(const WhithamCoefficients& coeffs, double dy);

// Solution on a periodic slow grid of k0.size() cells spanning `length`
// periods. Returns the initial state followed by one state per output time.
std::vector<WhithamState> solve_whitham(const WhithamCoefficients& coeffs, const Vec& k0, double length, double t_end,
                                        const WhithamOptions& options = {});

// k_*(1 + psi_x) sampled on a slow grid with `points` cells.
Vec wavenumber_field(const Vec& psi_x, double k_star, int points);

struct WhithamComparison {
  std::vector<double> t;
  std::vector<double> l2_error, linf_error, relative_l2;
  std::vector<double> whitham_linf, pde_linf;  // |k - k_*|_inf of each field
};

WhithamComparison compare_with_pde(const std::vector<WhithamState>& whitham, const std::vector<FieldState>& pde,
                                   double k_star, double length);

}  // namespace modwave
