#pragma once

#include "modwave/common.hpp"
#include "modwave/model.hpp"

#include <vector>

namespace modwave {

// Period-one standing profile of k^2 u'' + k c u' + f(u) = 0.
struct WaveProfile {
  double k_star = 0.0;
  double c = 0.0;
  int M = 0;
  int n = 0;
  Field values;   // M x n
  Field deriv;    // u'
  Field second;   // u''
  Field b_coeff;  // M x (n*n), row-major df(u(x_i))
  double residual_norm = 0.0;

  int newton_iterations = 0;
  double last_correction = 0.0;
  int phase_component = 0;

  Eigen::MatrixXd b_at(int i) const;
  Vec x() const { return Vec::LinSpaced(M, 0.0, (M - 1.0) / M); }
};

struct ProfileOptions {
  int max_iter = 50;
  double tol = 1e-10;
  double c_guess = 0.0;
};

Field profile_residual(const ReactionSystem& system, double k, double c, const Field& values);

// Newton on the Fourier collocation system with unknown speed c and a
// translation phase condition (first harmonic of one component is real).
WaveProfile solve_profile(const ReactionSystem& system, double k, const Field& initial_guess, int M,
                          const ProfileOptions& options = {});

// Re-evaluates derived fields (deriv, second, b_coeff, residual) from values.
void finalize_profile(const ReactionSystem& system, WaveProfile& profile);

struct ProfileFamily {
  std::vector<double> k_grid;
  std::vector<WaveProfile> profiles;
  std::vector<double> c_of_k;
  std::vector<double> omega_of_k;
  std::vector<Field> dk_profile;
  int base_index = 0;
};

ProfileFamily continue_family(const ReactionSystem& system, const WaveProfile& base, double delta_k, int n_steps,
                              const ProfileOptions& options = {});

}  // namespace modwave
