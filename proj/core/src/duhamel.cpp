#include "modwave/dynamics.hpp"

#include "modwave/spectral.hpp"

#include <cmath>
#include <set>

namespace modwave {

namespace {

// Scalar Bloch symbol (j = 0 mode only) back to the torus, times (i xi)^l.
Vec scalar_inverse(const PropagatorPlan& plan, const CVec& sigma, int l) {
  BlochField b = zero_bloch_field(plan.grid(), 1);
  for (int r = 0; r < plan.grid().periods; ++r)
    b.coeffs(b.index(0, 0), r) = sigma(r) * (l == 0 ? cplx(1.0) : std::pow(cplx(0.0, plan.xi()(r)), l));
  return bloch_inverse(b).col(0);
}

Field vector_inverse(const PropagatorPlan& plan, const CField& z, bool with_lambda) {
  BlochField b = zero_bloch_field(plan.grid(), plan.profile().n);
  for (int r = 0; r < plan.grid().periods; ++r) {
    const FloquetEigen& e = plan.eigen(r);
    b.coeffs.col(r) = with_lambda ? CVec(e.V * e.lambda.cwiseProduct(z.col(r))) : CVec(e.V * z.col(r));
  }
  return bloch_inverse(b);
}

Field scale_rows(const Field& f, const Vec& s) {
  Field out = f;
  for (int c = 0; c < f.cols(); ++c) out.col(c).array() *= s.array();
  return out;
}

struct Iterate {
  CField Z;       // eigen-coordinates of w
  CField src;     // source driving this iterate (previous iterate's N)
  CField zN;      // this iterate's own N
  Vec psi;
  Field v;
};

}  // namespace

DuhamelResult duhamel_iterate(const PropagatorPlan& plan, const ReactionSystem& system, const ModulationData& h,
                              const Field& d0, const DuhamelOptions& options) {
  const Grid& grid = plan.grid();
  const WaveProfile& profile = plan.profile();
  if (h.grid.periods != grid.periods || h.grid.points != grid.points) throw SizeMismatch("modulation grid != plan grid");
  if (d0.rows() != grid.size() || d0.cols() != profile.n) throw SizeMismatch("d0 shape does not match the plan");
  if (!(options.horizon > 0.0) || !(options.dt > 0.0)) throw InvalidParameter("horizon and dt must be positive");
  if (options.n_iter < 1) throw InvalidParameter("at least one iteration is required");

  const int N = grid.periods;
  const int steps = static_cast<int>(std::lround(options.horizon / options.dt));
  const double dt = options.horizon / steps;
  const int P = options.n_iter;
  const TimeCutoff chi;
  const Field ubar_x = plan.tiled_derivative();

  std::set<int> outputs;
  if (options.output_times.empty())
    for (int n = 0; n <= steps; ++n) outputs.insert(n);
  for (double t : options.output_times) outputs.insert(std::min(steps, static_cast<int>(std::lround(t / dt))));

  const Field w0 = d0 + scale_rows(ubar_x, h.h0);
  const CField Z0 = plan.coordinates(w0);

  // Diagonal propagator over one step.
  CField E(Z0.rows(), N);
  for (int r = 0; r < N; ++r) E.col(r) = (plan.eigen(r).lambda * dt).array().exp();

  std::vector<Iterate> it(P + 1);
  for (auto& x : it) {
    x.Z = Z0;
    x.zN = CField::Zero(Z0.rows(), N);
    x.src = x.zN;
  }

  DuhamelResult result;
  result.iterations = P;
  result.successive_diff.assign(P + 1, 0.0);

  for (int n = 0; n <= steps; ++n) {
    const double t = n * dt;
    const double c = chi(t), dc = chi.derivative(t);
    for (int p = 0; p <= P; ++p) {
      Iterate& cur = it[p];
      // N of the previous iterate at this time closes the Picard step.
      const CField zN_src = p == 0 ? CField::Zero(Z0.rows(), N) : it[p - 1].zN;
      if (n > 0) cur.Z = E.cwiseProduct(cur.Z + 0.5 * dt * cur.src) + 0.5 * dt * zN_src;
      cur.src = zN_src;

      CVec sig(N), sig_t(N);
      for (int r = 0; r < N; ++r) {
        const FloquetEigen& e = plan.eigen(r);
        const double a = plan.alpha()(r);
        const cplx lam = e.lambda(e.critical);
        sig(r) = a * cur.Z(e.critical, r) / e.gauge;
        sig_t(r) = a * (lam * cur.Z(e.critical, r) + cur.src(e.critical, r)) / e.gauge;
      }
      const Vec pt = scalar_inverse(plan, sig, 0);
      const Vec pt_x = scalar_inverse(plan, sig, 1);
      const Vec pt_t = scalar_inverse(plan, sig_t, 0);
      const Vec pt_xt = scalar_inverse(plan, sig_t, 1);

      const Vec psi = c * pt + (1.0 - c) * h.h0;
      const Vec psi_x = c * pt_x + (1.0 - c) * h.dx_h0;
      const Vec psi_t = dc * (pt - h.h0) + c * pt_t;
      const Vec psi_xt = dc * (pt_x - h.dx_h0) + c * pt_xt;

      const Field w = vector_inverse(plan, cur.Z, false);
      const Field Lw = vector_inverse(plan, cur.Z, true);
      const Field v = w - scale_rows(ubar_x, psi);

      if (p > 0) {
        const double diff =
            std::max((psi - it[p - 1].psi).cwiseAbs().maxCoeff(), (v - it[p - 1].v).cwiseAbs().maxCoeff());
        result.successive_diff[p] = std::max(result.successive_diff[p], diff);
      }
      cur.psi = psi;
      cur.v = v;
      if (!psi.allFinite() || !v.allFinite()) throw IterationDiverges("Duhamel iterate is not finite");
      if (!(psi_x.cwiseAbs().maxCoeff() < 0.5)) throw MapNotInvertible("Duhamel iterate has |psi_x| >= 1/2");

      const Field Nfield = nonlinear_term(profile, system, grid, v, psi_x, psi_t, psi_xt, Lw);
      cur.zN = plan.coordinates(Nfield);

      if (p == P && outputs.count(n)) {
        result.times.push_back(t);
        result.psi.push_back(psi);
        result.psi_t.push_back(psi_t);
        result.v.push_back(v);
      }
    }
  }
  for (int p = 3; p <= P; ++p)
    if (result.successive_diff[p] > result.successive_diff[p - 1] &&
        result.successive_diff[p - 1] > result.successive_diff[p - 2])
      throw IterationDiverges("successive differences grew twice in a row");
  return result;
}

}  // namespace modwave
