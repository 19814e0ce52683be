#include "modwave/model.hpp"

#include <cmath>

namespace modwave {

double Polynomial::eval(const double* u) const {
  double sum = 0.0;
  for (const auto& t : terms) {
    double v = t.coef;
    for (size_t j = 0; j < t.powers.size(); ++j)
      for (int p = 0; p < t.powers[j]; ++p) v *= u[j];
    sum += v;
  }
  return sum;
}

void Polynomial::accumulate_gradient(const double* u, double* grad) const {
  for (const auto& t : terms) {
    for (size_t j = 0; j < t.powers.size(); ++j) {
      if (t.powers[j] == 0) continue;
      double v = t.coef * t.powers[j];
      for (size_t i = 0; i < t.powers.size(); ++i) {
        const int p = (i == j) ? t.powers[i] - 1 : t.powers[i];
        for (int r = 0; r < p; ++r) v *= u[i];
      }
      grad[j] += v;
    }
  }
}

void ReactionSystem::validate() const {
  if (n < 1) throw InvalidParameter("reaction system needs n >= 1");
  if (static_cast<int>(f.size()) != n) throw InvalidParameter("one polynomial per component required");
  if (smoothness_K < 3) throw InvalidParameter("smoothness_K must be >= 3");
  for (const auto& poly : f)
    for (const auto& t : poly.terms) {
      if (static_cast<int>(t.powers.size()) != n) throw InvalidParameter("monomial exponent count != n");
      for (int p : t.powers)
        if (p < 0) throw InvalidParameter("negative exponent in monomial");
    }
}

void ReactionSystem::eval(const double* u, double* out) const {
  for (int i = 0; i < n; ++i) out[i] = f[i].eval(u);
}

void ReactionSystem::jacobian(const double* u, double* out) const {
  for (int i = 0; i < n * n; ++i) out[i] = 0.0;
  for (int i = 0; i < n; ++i) f[i].accumulate_gradient(u, out + i * n);
}

Vec ReactionSystem::eval(const Vec& u) const {
  Vec out(n);
  eval(u.data(), out.data());
  return out;
}

Eigen::MatrixXd ReactionSystem::jacobian(const Vec& u) const {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> J(n, n);
  jacobian(u.data(), J.data());
  return J;
}

Field ReactionSystem::eval(const Field& u) const {
  Field out = Field::Zero(u.rows(), n);
  Eigen::ArrayXd term(u.rows());
  for (int c = 0; c < n; ++c)
    for (const auto& t : f[c].terms) {
      term.setConstant(t.coef);
      for (int j = 0; j < n; ++j)
        for (int p = 0; p < t.powers[j]; ++p) term *= u.col(j).array();
      out.col(c).array() += term;
    }
  return out;
}

void LambdaOmegaParams::validate() const {
  if (!std::isfinite(beta) || !std::isfinite(q)) throw InvalidParameter("lambda-omega parameters must be finite");
  if (std::abs(q) >= 1.0) throw InvalidParameter("lambda-omega wave trains need |q| < 1");
}

double LambdaOmegaParams::r0() const { return std::sqrt(r0_squared()); }

double LambdaOmegaParams::c() const {
  if (q == 0.0) throw InvalidParameter("q = 0 is a homogeneous oscillation, not a wave train");
  return -Omega() / q;
}

ReactionSystem make_lambda_omega(const LambdaOmegaParams& params) {
  params.validate();
  const double b = params.beta;
  // (1 - r^2) u + b r^2 v  and  -b r^2 u + (1 - r^2) v.
  ReactionSystem sys;
  sys.name = "lambda_omega";
  sys.n = 2;
  sys.f.resize(2);
  sys.f[0].terms = {{1.0, {1, 0}}, {-1.0, {3, 0}}, {-1.0, {1, 2}}, {b, {2, 1}}, {b, {0, 3}}};
  sys.f[1].terms = {{1.0, {0, 1}}, {-1.0, {2, 1}}, {-1.0, {0, 3}}, {-b, {3, 0}}, {-b, {1, 2}}};
  sys.params = {{"beta", params.beta}, {"q", params.q}};
  sys.smoothness_K = 3;
  return sys;
}

Eigen::Matrix2cd lambda_omega_symbol(const LambdaOmegaParams& params, double eta) {
  params.validate();
  const double q = params.q, b = params.beta, r2 = params.r0_squared();
  const double k = params.k();
  const double c = params.c();
  const cplx i(0.0, 1.0);
  // Linearizing A_t = A_xx + (1 - |A|^2 - i b |A|^2) A about r0 e^{i theta}
  // in the co-rotating frame gives a constant-coefficient system for
  // (a, conj a); the q-shift of the exponentials enters as +-2 q k eta.
  const cplx diag = -k * k * eta * eta + i * k * c * eta;
  Eigen::Matrix2cd m;
  m(0, 0) = diag - 2.0 * q * k * eta - (1.0 + i * b) * r2;
  m(0, 1) = -(1.0 + i * b) * r2;
  m(1, 0) = -(1.0 - i * b) * r2;
  m(1, 1) = diag + 2.0 * q * k * eta - (1.0 - i * b) * r2;
  return m;
}

std::pair<cplx, cplx> exact_dispersion_lambda_omega(const LambdaOmegaParams& params, double xi) {
  const Eigen::Matrix2cd m = lambda_omega_symbol(params, xi);
  const cplx tr = m.trace();
  const cplx det = m.determinant();
  cplx disc = std::sqrt(tr * tr - 4.0 * det);
  if (disc.real() < 0.0) disc = -disc;
  // tr < 0, so the + root is the one through zero at xi = 0.
  return {0.5 * (tr + disc), 0.5 * (tr - disc)};
}

Field lambda_omega_profile(const LambdaOmegaParams& params, int M, double shift) {
  Field u(M, 2);
  const double r0 = params.r0();
  for (int i = 0; i < M; ++i) {
    const double th = two_pi * (static_cast<double>(i) / M + shift);
    u(i, 0) = r0 * std::cos(th);
    u(i, 1) = r0 * std::sin(th);
  }
  return u;
}

}  // namespace modwave
