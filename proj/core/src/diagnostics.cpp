#include "modwave/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace modwave {

namespace {

// int_{a}^{b} e^{-theta (t - s)} g(s) ds for g linear between (a, ga) and (b, gb).
double exp_linear_integral(double theta, double t, double a, double b, double ga, double gb) {
  const double len = b - a;
  if (len <= 0.0) return 0.0;
  if (theta * len < 1e-8) return 0.5 * len * (ga + gb) * std::exp(-theta * (t - b));
  const double eb = std::exp(-theta * (t - b)), ea = std::exp(-theta * (t - a));
  // int e^{theta s} (ga + (gb - ga)(s - a)/len) ds, scaled by e^{-theta t}.
  const double slope = (gb - ga) / len;
  const double part0 = (eb * gb - ea * ga) / theta;
  const double part1 = slope * (eb - ea) / (theta * theta);
  return part0 - part1;
}

}  // namespace

DampingReport damping_diagnostic(const Trajectory& traj, double theta, double ceiling, double small_threshold) {
  DampingReport rep;
  if (traj.samples.empty()) {
    rep.note = "empty trajectory";
    return rep;
  }
  for (const auto& s : traj.samples) {
    if (s.psix_max >= 0.5 || s.triple_hk > small_threshold) rep.regime_ok = false;
  }
  const double v0 = traj.samples.front().v_hk * traj.samples.front().v_hk;
  const double t0 = traj.samples.front().t;
  auto source = [](const TrajectorySample& s) {
    return s.v_l2sq + s.grad_hk * s.grad_hk;
  };
  std::vector<double> base(traj.samples.size());
  double integral = 0.0;
  for (size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    if (i > 0) {
      const auto& p = traj.samples[i - 1];
      integral = integral * std::exp(-theta * (s.t - p.t)) +
                 exp_linear_integral(theta, s.t, p.t, s.t, source(p), source(s));
    }
    base[i] = std::exp(-theta * (s.t - t0)) * v0 + integral;
    const double lhs = s.v_hk * s.v_hk;
    rep.t.push_back(s.t);
    rep.lhs.push_back(lhs);
    if (lhs > 0.0) rep.C = std::max(rep.C, base[i] > 0.0 ? lhs / base[i] : inf);
  }
  for (double b : base) rep.rhs.push_back(rep.C * b);
  rep.bound_ok = rep.regime_ok && std::isfinite(rep.C) && rep.C <= ceiling;
  if (!rep.regime_ok)
    rep.note = "regime violation: trajectory is not in the small regime, bound not asserted";
  else if (!rep.bound_ok)
    rep.note = "fitted constant exceeds the ceiling";
  return rep;
}

ZetaTrace zeta_trace(const Trajectory& traj) {
  ZetaTrace z;
  double sup = 0.0;
  for (const auto& s : traj.samples) {
    sup = std::max(sup, std::pow(1.0 + s.t, 0.25) * s.triple_hk);
    z.t.push_back(s.t);
    z.zeta.push_back(sup);
    const double denom = traj.E0 + sup * sup;
    if (denom > 0.0) z.C = std::max(z.C, sup / denom);
  }
  z.sup = sup;
  return z;
}

TheoremSuite theorem_decay_suite(const Trajectory& traj, const std::vector<double>& p_list, double t_min,
                                 double t_max) {
  TheoremSuite suite;
  std::vector<double> t;
  double boundary = 0.0;
  for (const auto& s : traj.samples) {
    if (s.psix_max >= 0.5) suite.regime_ok = false;
    if (s.t < t_min - 1e-9 || s.t > t_max + 1e-9) continue;
    t.push_back(s.t);
    boundary = std::max(boundary, s.boundary_ratio);
  }
  suite.max_boundary_ratio = boundary;
  for (double p : p_list) {
    std::vector<double> nv, ng;
    for (const auto& s : traj.samples) {
      if (s.t < t_min - 1e-9 || s.t > t_max + 1e-9) continue;
      if (p == 1.0) {
        nv.push_back(s.v_l1), ng.push_back(s.grad_l1);
      } else if (p == 2.0) {
        nv.push_back(s.v_l2), ng.push_back(s.grad_l2);
      } else if (std::isinf(p)) {
        nv.push_back(s.v_linf), ng.push_back(s.grad_linf);
      } else {
        throw InvalidParameter("theorem suite supports p in {1, 2, inf}");
      }
    }
    const double predicted = -0.5 * (1.0 - (std::isinf(p) ? 0.0 : 1.0 / p));
    DecayFit fv = fit_decay(t, nv, p, t_min, t_max);
    fv.label = "v";
    fv.predicted = predicted;
    fv.max_boundary_ratio = boundary;
    DecayFit fg = fit_decay(t, ng, p, t_min, t_max);
    fg.label = "grad psi";
    fg.predicted = predicted;
    fg.max_boundary_ratio = boundary;
    suite.fits.push_back(fv);
    suite.fits.push_back(fg);
  }
  double lo = inf, hi = 0.0, um = 0.0;
  for (const auto& s : traj.samples) {
    if (s.t > t_max + 1e-9) continue;
    lo = std::min(lo, s.psi_linf);
    hi = std::max(hi, s.psi_linf);
    um = std::max(um, s.u_minus_ubar_linf);
  }
  if (traj.h0_linf > 0.0) {
    suite.psi_linf_min_ratio = lo / traj.h0_linf;
    suite.psi_linf_max_ratio = hi / traj.h0_linf;
  }
  suite.u_minus_ubar_max = um;
  return suite;
}

}  // namespace modwave
