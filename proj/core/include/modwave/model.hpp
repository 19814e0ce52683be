#pragma once

#include "modwave/common.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace modwave {

struct Monomial {
  double coef = 0.0;
  std::vector<int> powers;  // one exponent per component
};

struct Polynomial {
  std::vector<Monomial> terms;

  double eval(const double* u) const;
  // Adds d/du_j of this polynomial into grad[j].
  void accumulate_gradient(const double* u, double* grad) const;
};

// u_t = u_xx + f(u) with identity diffusion and polynomial reaction terms.
struct ReactionSystem {
  std::string name;
  int n = 0;
  std::vector<Polynomial> f;
  std::map<std::string, double> params;
  int smoothness_K = 3;

  void validate() const;

  void eval(const double* u, double* out) const;
  // Row-major n x n Jacobian.
  void jacobian(const double* u, double* out) const;

  Vec eval(const Vec& u) const;
  Eigen::MatrixXd jacobian(const Vec& u) const;

  // Pointwise evaluation on a grid function (rows = points).
  Field eval(const Field& u) const;
};

struct LambdaOmegaParams {
  double beta = 0.5;
  double q = 0.2;

  void validate() const;
  double r0_squared() const { return 1.0 - q * q; }
  double r0() const;
  // Phase rate of the rotating wave train r0 (cos, sin)(q x + Omega t).
  double Omega() const { return -beta * r0_squared(); }
  // Wavenumber and speed of the period-one profile: theta = 2 pi k (x - c t).
  double k() const { return q / two_pi; }
  double c() const;
};

ReactionSystem make_lambda_omega(const LambdaOmegaParams& params);

// 2x2 symbol of the linearization about the wave train at total frequency
// eta, written in the period-one variable with the profile equation's
// scaling k^2 d_xx + k c d_x + df (complex amplitude coordinates A, conj A).
Eigen::Matrix2cd lambda_omega_symbol(const LambdaOmegaParams& params, double eta);

// Eigenvalues of the symbol at Bloch frequency xi; first is the critical
// (phase) branch, second the amplitude branch.
std::pair<cplx, cplx> exact_dispersion_lambda_omega(const LambdaOmegaParams& params, double xi);

// Samples r0 (cos 2 pi (x+s), sin 2 pi (x+s)) on M points of [0, 1).
Field lambda_omega_profile(const LambdaOmegaParams& params, int M, double shift = 0.0);

}  // namespace modwave
