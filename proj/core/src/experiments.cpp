#include "modwave/propagator.hpp"
#include "modwave/spectral.hpp"

#include <cmath>
#include <sstream>

namespace modwave {

std::vector<double> geometric_grid(double t0, double t1, int per_decade) {
  if (!(t0 > 0.0) || !(t1 > t0) || per_decade < 1) throw InvalidParameter("geometric grid needs 0 < t0 < t1");
  const int count = static_cast<int>(std::lround(per_decade * std::log10(t1 / t0)));
  std::vector<double> t;
  for (int k = 0; k <= count; ++k) t.push_back(t0 * std::pow(10.0, static_cast<double>(k) / per_decade));
  t.back() = t1;
  return t;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& norms, double p, double t_min,
                   double t_max) {
  if (t.size() != norms.size()) throw SizeMismatch("fit_decay: series lengths differ");
  DecayFit fit;
  fit.p = p;
  fit.t_min = t_min;
  fit.t_max = t_max;
  for (size_t i = 0; i < t.size(); ++i) fit.series.emplace_back(t[i], norms[i]);

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int count = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_min - 1e-12 || t[i] > t_max + 1e-12) continue;
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
      fit.degenerate = true;
      continue;
    }
    const double x = std::log1p(t[i]), y = std::log(norms[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y;
    ++count;
  }
  if (count < 2 || fit.degenerate) {
    fit.degenerate = true;
    fit.exponent = std::nan("");
    fit.r_squared = std::nan("");
    return fit;
  }
  const double vx = sxx - sx * sx / count;
  const double cxy = sxy - sx * sy / count;
  const double vy = syy - sy * sy / count;
  fit.exponent = cxy / vx;
  fit.intercept = (sy - fit.exponent * sx) / count;
  fit.r_squared = vy > 0.0 ? (cxy * cxy) / (vx * vy) : 1.0;
  return fit;
}

ModulationData ModulationData::from_samples(const Grid& grid, const Vec& h0, int K) {
  grid.validate();
  if (h0.size() != grid.size()) throw SizeMismatch("h0 length != grid size");
  ModulationData h;
  h.grid = grid;
  h.K = K;
  h.h0 = h0;
  h.dx_h0 = derivative(h0, grid.length(), 1);
  const double peak = h.dx_h0.cwiseAbs().maxCoeff();
  if (peak > 0.0) {
    const int L = grid.size();
    double outside = 0.0;
    for (int i = 0; i < L; ++i)
      if (i < L / 4 || i >= 3 * L / 4) outside = std::max(outside, std::abs(h.dx_h0(i)));
    if (outside > 1e-8 * peak) {
      std::ostringstream msg;
      msg << "d_x h0 is not localized: " << outside / peak << " of its peak outside the central half";
      throw PreconditionViolation(msg.str());
    }
  }
  h.norm_dx_l1_hk1 = l1_hk_norm(h.dx_h0, grid.length(), K + 1);
  return h;
}

ModulationData ModulationData::plateau(const Grid& grid, Shape shape, double amplitude, double width, double left,
                                       double right, int K) {
  if (!(width > 0.0)) throw InvalidParameter("plateau width must be positive");
  if (shape == Shape::custom) throw InvalidParameter("custom shapes go through from_samples");
  Vec h0(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    const double a = (x - left) / width, b = (x - right) / width;
    h0(i) = shape == Shape::step ? 0.5 * amplitude * (std::tanh(a) - std::tanh(b))
                                 : 0.5 * amplitude * (std::erf(a) - std::erf(b));
  }
  return from_samples(grid, h0, K);
}

Field ModulationData::times_derivative(const PropagatorPlan& plan) const {
  Field g = plan.tiled_derivative();
  if (g.rows() != h0.size()) throw SizeMismatch("modulation grid does not match the plan");
  for (int c = 0; c < g.cols(); ++c) g.col(c).array() *= h0.array();
  return g;
}

DecayFit decay_experiment(const PropagatorPlan& plan, const Field& g, const std::vector<double>& t_grid, Operator op,
                          int l, int m, double p, const ExperimentOptions& options) {
  if (t_grid.empty()) throw InvalidParameter("empty time grid");
  const CField z = plan.coordinates(g);
  const Grid& grid = plan.grid();
  std::vector<double> norms;
  double worst = 0.0;
  for (double t : t_grid) {
    double nrm = 0.0, ratio = 0.0;
    if (op == Operator::sp) {
      const Vec s = apply_sp(plan, z, t, l, m);
      nrm = lp_norm(s, grid.h(), p);
      ratio = boundary_ratio(s, grid);
    } else {
      const Field f = op == Operator::S ? apply_S(plan, z, t, l, m) : apply_S_tilde(plan, z, t, l, m);
      nrm = lp_norm(f, grid.h(), p);
      ratio = boundary_ratio(f, grid);
    }
    if (ratio > options.boundary_tolerance) {
      std::ostringstream msg;
      msg << "propagated field reaches the domain edge at t = " << t << " (ratio " << ratio << ")";
      throw BoundaryContamination(msg.str());
    }
    worst = std::max(worst, ratio);
    norms.push_back(nrm);
  }
  DecayFit fit = fit_decay(t_grid, norms, p, t_grid.front(), t_grid.back());
  fit.max_boundary_ratio = worst;
  return fit;
}

namespace {

double lp_part(double p) { return std::isinf(p) ? 1.0 : 1.0 - 1.0 / p; }

}  // namespace

DecayFit modulational_experiment(const PropagatorPlan& plan, const ModulationData& h, const std::vector<double>& t_grid,
                                 int l, int m, double p, const ExperimentOptions& options) {
  const bool claimed = (l + m >= 1) || std::isinf(p);
  if (!claimed && !options.allow_unclaimed)
    throw PreconditionViolation("no L^p bound is claimed for l = m = 0 with finite p");
  DecayFit fit = decay_experiment(plan, h.times_derivative(plan), t_grid, Operator::sp, l, m, p, options);
  fit.claimed = claimed;
  fit.predicted = -0.5 * lp_part(p) + 0.5 - 0.5 * (l + m);
  std::ostringstream name;
  name << "modulational_sp_l" << l << "_m" << m << "_p" << (std::isinf(p) ? std::string("inf") : std::to_string(static_cast<int>(p)));
  fit.label = name.str();
  return fit;
}

DecayFit modulational_Stilde_experiment(const PropagatorPlan& plan, const ModulationData& h,
                                        const std::vector<double>& t_grid, int l, int m, double p,
                                        const ExperimentOptions& options) {
  if (l + 2 * m > h.K + 1) throw PreconditionViolation("l + 2m must not exceed K + 1");
  DecayFit fit = decay_experiment(plan, h.times_derivative(plan), t_grid, Operator::S_tilde, l, m, p, options);
  fit.predicted = -0.5 * lp_part(p);
  std::ostringstream name;
  name << "modulational_Stilde_l" << l << "_m" << m << "_p" << (std::isinf(p) ? std::string("inf") : std::to_string(static_cast<int>(p)));
  fit.label = name.str();
  return fit;
}

InitialLayerTable initial_layer_check(const PropagatorPlan& plan, const ModulationData& h, const Field& d0,
                                      const std::vector<double>& t_grid, double p) {
  const Grid& grid = plan.grid();
  InitialLayerTable table;
  table.p = p;
  const double L = grid.length();
  const double l1 = lp_norm(h.dx_h0, grid.h(), 1.0);
  table.norm_l1_h1 = l1 + hk_norm(h.dx_h0, L, 1);
  table.norm_l1_l2 = l1 + lp_norm(h.dx_h0, grid.h(), 2.0);

  const Field g = h.times_derivative(plan);
  const Field up = plan.tiled_derivative();
  const CField zg = plan.coordinates(g);
  const CField zd = plan.coordinates(d0);
  for (double t : t_grid) {
    if (!(t > 0.0) || t > 1.0) throw PreconditionViolation("initial layer times must lie in (0, 1]");
    const Vec s = apply_sp(plan, zg, t);
    InitialLayerRow row;
    row.t = t;
    Field diff = up;
    for (int c = 0; c < diff.cols(); ++c) diff.col(c).array() *= s.array();
    diff -= g;
    row.Sp_minus_id = lp_norm(diff, grid.h(), p);
    row.sp_minus_h0 = lp_norm(Vec(s - h.h0), grid.h(), p);
    const Vec sd = apply_sp(plan, zd, t);
    Field Spd = up;
    for (int c = 0; c < Spd.cols(); ++c) Spd.col(c).array() *= sd.array();
    row.Sp_d0 = lp_norm(Spd, grid.h(), p);
    table.rows.push_back(row);
    if (table.norm_l1_h1 > 0.0) table.C_Sp = std::max(table.C_Sp, row.Sp_minus_id / table.norm_l1_h1);
    if (table.norm_l1_l2 > 0.0) table.C_sp = std::max(table.C_sp, row.sp_minus_h0 / table.norm_l1_l2);
  }
  const Vec s0 = apply_sp(plan, zg, 0.0);
  Field lhs = up;
  for (int c = 0; c < lhs.cols(); ++c) lhs.col(c).array() *= s0.array();
  lhs -= g;
  table.limit_error = (lhs + apply_S_tilde(plan, zg, 0.0)).cwiseAbs().maxCoeff();
  return table;
}

Field kernel_probe(const PropagatorPlan& plan, double y, double t) {
  if (!(t > 0.0)) throw PreconditionViolation("kernel_probe needs t > 0");
  const Grid& grid = plan.grid();
  const int L = grid.size();
  int i = static_cast<int>(std::lround(y * grid.points)) % L;
  if (i < 0) i += L;
  const int n = plan.profile().n;
  Field out(L, n);
  for (int c = 0; c < n; ++c) {
    Field g = Field::Zero(L, n);
    g(i, c) = 1.0 / grid.h();
    out.col(c) = apply_sp(plan, g, t);
  }
  return out;
}

}  // namespace modwave
