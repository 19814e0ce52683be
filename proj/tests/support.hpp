#pragma once

#include "modwave/model.hpp"
#include "modwave/profile.hpp"
#include "modwave/propagator.hpp"

#include <random>

namespace modwave::testing {

// Parameters with a known closed-form wave train.
inline const LambdaOmegaParams& spectral_params() {
  static const LambdaOmegaParams p{0.5, 0.2};
  return p;
}

// Weakly dispersive, diffusively stable wave train used for the dynamics.
inline const LambdaOmegaParams& dynamic_params() {
  static const LambdaOmegaParams p{0.03, 0.35};
  return p;
}

inline WaveProfile solve_lambda_omega(const LambdaOmegaParams& p, int M) {
  return solve_profile(make_lambda_omega(p), p.k(), lambda_omega_profile(p, M), M);
}

inline const WaveProfile& spectral_profile() {
  static const WaveProfile w = solve_lambda_omega(spectral_params(), 32);
  return w;
}

inline const WaveProfile& dynamic_profile() {
  static const WaveProfile w = solve_lambda_omega(dynamic_params(), 32);
  return w;
}

inline const PropagatorPlan& small_plan() {
  static const PropagatorPlan plan(dynamic_profile(), 64);
  return plan;
}

inline Field gaussian_field(const Grid& g, int n, double center, double width, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Field out(g.size(), n);
  std::vector<double> a(n), b(n);
  for (int c = 0; c < n; ++c) a[c] = normal(rng), b[c] = normal(rng);
  for (int i = 0; i < g.size(); ++i) {
    const double x = g.x(i), s = (x - center) / width;
    for (int c = 0; c < n; ++c) out(i, c) = std::exp(-s * s) * (a[c] + b[c] * std::cos(two_pi * x));
  }
  return out;
}

}  // namespace modwave::testing
