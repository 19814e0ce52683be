#include "modwave/propagator.hpp"

#include "modwave/spectral.hpp"

#include <cmath>
#include <sstream>

namespace modwave {

namespace {

// C-infinity step between xi0 and 2 xi0. A finitely smooth step leaves
// algebraic tails in x that reach the edge of the torus.
double smooth_cutoff(double xi, double xi0) {
  const double a = std::abs(xi);
  if (xi0 <= 0.0) return 0.0;
  if (a <= xi0) return 1.0;
  if (a >= 2.0 * xi0) return 0.0;
  const double s = (a - xi0) / xi0;
  const double f0 = std::exp(-1.0 / s), f1 = std::exp(-1.0 / (1.0 - s));
  return f1 / (f0 + f1);
}

// (i (xi + 2 pi j))^l applied to every column of a Bloch field.
void apply_dx(BlochField& b, int l) {
  if (l == 0) return;
  for (int r = 0; r < b.periods; ++r)
    for (int c = 0; c < b.components; ++c)
      for (int j = -b.points / 2; j < b.points / 2; ++j)
        b.coeffs(b.index(c, j), r) *= std::pow(cplx(0.0, b.total_frequency(r, j)), l);
}

cplx pow_int(cplx z, int m) {
  cplx out = 1.0;
  for (int i = 0; i < m; ++i) out *= z;
  return out;
}

}  // namespace

PropagatorPlan::PropagatorPlan(const WaveProfile& profile, int periods, const PropagatorOptions& options)
    : profile_(profile), grid_{periods, profile.M} {
  grid_.validate();
  if (!is_power_of_two(periods) || periods < 64)
    throw InvalidParameter("propagator needs a power-of-two period count >= 64");
  ScanOptions so;
  so.keep_eigendata = true;
  so.jobs = options.jobs;
  scan_ = spectrum_scan(profile_, periods, so);
  if (scan_.summary.max_reconstruction_error > 1e-9) {
    std::ostringstream msg;
    msg << "eigenbasis too ill-conditioned for propagation (relative error "
        << scan_.summary.max_reconstruction_error << ")";
    throw NoConvergence(msg.str());
  }
  xi0_ = options.xi0_override >= 0.0 ? options.xi0_override : scan_.summary.xi0;
  alpha_.resize(periods);
  for (int r = 0; r < periods; ++r) alpha_(r) = smooth_cutoff(scan_.xi(r), xi0_);
  phi0_ = mode_coefficients(profile_.deriv);
}

double PropagatorPlan::cutoff(double xi) const { return smooth_cutoff(xi, xi0_); }

Eigen::MatrixXcd PropagatorPlan::exp_tL(int r, double t) const {
  const FloquetEigen& e = scan_.eigen[r];
  const CVec ex = (e.lambda * t).array().exp();
  return e.V * ex.asDiagonal() * e.Vinv;
}

CField PropagatorPlan::coordinates(const BlochField& g) const {
  if (g.components != profile_.n || g.periods != grid_.periods || g.points != grid_.points)
    throw SizeMismatch("Bloch field does not match the plan");
  CField z(g.coeffs.rows(), g.coeffs.cols());
  for (int r = 0; r < grid_.periods; ++r) z.col(r) = scan_.eigen[r].Vinv * g.coeffs.col(r);
  return z;
}

CField PropagatorPlan::coordinates(const Field& g) const { return coordinates(bloch_forward(g, grid_)); }

Field PropagatorPlan::tiled_derivative() const {
  Field out(grid_.size(), profile_.n);
  for (int i = 0; i < grid_.size(); ++i) out.row(i) = profile_.deriv.row(i % profile_.M);
  return out;
}

Field apply_S(const PropagatorPlan& plan, const CField& z, double t, int l, int m) {
  if (t < 0.0) throw PreconditionViolation("apply_S needs t >= 0");
  BlochField out = zero_bloch_field(plan.grid(), plan.profile().n);
  for (int r = 0; r < plan.grid().periods; ++r) {
    const FloquetEigen& e = plan.eigen(r);
    CVec w = z.col(r);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) *= std::exp(e.lambda(i) * t) * pow_int(e.lambda(i), m);
    out.coeffs.col(r) = e.V * w;
  }
  apply_dx(out, l);
  return bloch_inverse(out);
}

Field apply_S(const PropagatorPlan& plan, const Field& g, double t, int l, int m) {
  return apply_S(plan, plan.coordinates(g), t, l, m);
}

CVec sp_symbol(const PropagatorPlan& plan, const CField& z, double t, int m) {
  const int N = plan.grid().periods;
  CVec sigma = CVec::Zero(N);
  for (int r = 0; r < N; ++r) {
    const double a = plan.alpha()(r);
    if (a == 0.0) continue;
    const FloquetEigen& e = plan.eigen(r);
    const cplx lam = e.lambda(e.critical);
    sigma(r) = a * std::exp(lam * t) * pow_int(lam, m) * z(e.critical, r) / e.gauge;
  }
  return sigma;
}

Vec apply_sp(const PropagatorPlan& plan, const CField& z, double t, int l, int m) {
  if (t < 0.0) throw PreconditionViolation("apply_sp needs t >= 0");
  const CVec sigma = sp_symbol(plan, z, t, m);
  BlochField out = zero_bloch_field(plan.grid(), 1);
  for (int r = 0; r < plan.grid().periods; ++r)
    out.coeffs(out.index(0, 0), r) = sigma(r) * std::pow(cplx(0.0, plan.xi()(r)), l);
  return bloch_inverse(out).col(0);
}

Vec apply_sp(const PropagatorPlan& plan, const Field& g, double t, int l, int m) {
  return apply_sp(plan, plan.coordinates(g), t, l, m);
}

Field apply_S_tilde(const PropagatorPlan& plan, const CField& z, double t, int l, int m) {
  if (t < 0.0) throw PreconditionViolation("apply_S_tilde needs t >= 0");
  BlochField out = zero_bloch_field(plan.grid(), plan.profile().n);
  const CVec& phi0 = plan.phi0();
  for (int r = 0; r < plan.grid().periods; ++r) {
    const FloquetEigen& e = plan.eigen(r);
    const double a = plan.alpha()(r);
    CVec w = z.col(r);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) *= std::exp(e.lambda(i) * t) * pow_int(e.lambda(i), m);
    // (1 - a) e^{tL} g  +  a e^{tL} Pi~ g: the critical coordinate keeps weight 1 - a.
    const cplx crit = w(e.critical);
    w(e.critical) = (1.0 - a) * crit;
    CVec col = e.V * w;
    if (a != 0.0) {
      // a e^{lambda t} (phi(xi) - phi(0)) <phi~, g>
      const CVec phi = e.V.col(e.critical) * e.gauge;
      col += a * (phi - phi0) * (crit / e.gauge);
    }
    out.coeffs.col(r) = col;
  }
  apply_dx(out, l);
  return bloch_inverse(out);
}

Field apply_S_tilde(const PropagatorPlan& plan, const Field& g, double t, int l, int m) {
  return apply_S_tilde(plan, plan.coordinates(g), t, l, m);
}

}  // namespace modwave
