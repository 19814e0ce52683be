#pragma once

#include "modwave/common.hpp"
#include "modwave/model.hpp"
#include "modwave/profile.hpp"
#include "modwave/propagator.hpp"

#include <string>
#include <vector>

namespace modwave {

// Quintic smoothstep rescaled to [1/2, 1].
struct TimeCutoff {
  double operator()(double t) const;
  double derivative(double t) const;
};

struct FieldState {
  Grid grid;
  double t = 0.0;
  Field u_tilde;
  Vec psi, psi_x, psi_t, psi_xt;
  Field v, v_t;
  double zeta = 0.0;
  double E0 = 0.0;
};

// u' and u tiled over the torus.
Field tile(const Field& periodic, const Grid& grid);

// Evaluates the period-one profile at arbitrary points by its Fourier series.
Field evaluate_profile(const WaveProfile& profile, const Vec& y);

// Y with Y(x) - psi(Y(x)) = x.
Vec invert_Y(const Vec& psi, const Grid& grid);

// u~(x) = ubar(Y(x)) + v(Y(x)), the inverse of v(x) = u~(x - psi(x)) - ubar(x).
Field reconstruct(const WaveProfile& profile, const Grid& grid, const Vec& psi, const Field& v);

// E0 = |v0|_{L^1 cap H^K} + |d_x h0|_{L^1 cap H^K}.
double initial_size(const ModulationData& h, const Field& v0, int K);

FieldState make_initial_data(const WaveProfile& profile, const ModulationData& h, const Field& v0,
                             double E0_threshold = 0.1);

// ETDRK4 for u_t = k u_yy + c u_y + f(u)/k on the torus (Kassam-Trefethen
// contour coefficients).
class Integrator {
 public:
  Integrator(const ReactionSystem& system, const WaveProfile& profile, const Grid& grid, double dt);

  void step(Field& u) const;
  double dt() const { return dt_; }
  void set_blowup_bound(double bound) { bound_ = bound; }

 private:
  void nonlinear(const Field& u, CField& out) const;
  void to_physical(const CField& spec, Field& u) const;

  const ReactionSystem* system_;
  Grid grid_;
  double dt_, k_;
  CVec E_, E2_, Q_, f1_, f2_, f3_;
  double bound_ = inf;
  // Work buffers; an Integrator is not shared between threads.
  mutable CField uh_, Nu_, Na_, Nb_, Nc_, a_, b_, c_, scratch_;
  mutable Field tmp_;
};

FieldState step(const ReactionSystem& system, const WaveProfile& profile, const FieldState& state, double dt);

struct PhaseExtraction {
  Vec psi, psi_x;
  Field v;
  int iterations = 0;
  double last_update = 0.0;
};

struct ExtractionOptions {
  int max_iter = 50;
  double tol = 1e-14;
};

// Windowed phase: a constant-shift correlation maximizer per one-period window
// initializes the field (or `guess` when given), then a pointwise Newton solve
// makes v = u~(x - psi(x)) - ubar(x) orthogonal to u~'(x - psi(x)).
PhaseExtraction extract_phase(const Field& u_tilde, const WaveProfile& profile, const Grid& grid,
                              const Vec* guess = nullptr, const ExtractionOptions& options = {});

// Constant-shift correlation stage only.
Vec windowed_correlation_phase(const Field& u_tilde, const WaveProfile& profile, const Grid& grid,
                               const Vec* guess = nullptr);

struct ResidualBundle {
  Field Q, R, S_cal, T_cal, N_total;
};

ResidualBundle residual_bundle(const FieldState& state, const WaveProfile& profile, const ReactionSystem& system);

// Generator L = k d_yy + c d_y + b / k applied on the torus.
Field apply_generator(const WaveProfile& profile, const Grid& grid, const Field& w);

// N solved from the identity with v_t eliminated through w_t = L w + N.
Field nonlinear_term(const WaveProfile& profile, const ReactionSystem& system, const Grid& grid, const Field& v,
                     const Vec& psi_x, const Vec& psi_t, const Vec& psi_xt, const Field& Lw);

struct SimulationConfig {
  double dt = 0.0625;
  std::vector<double> output_times;    // sampled norms
  std::vector<double> snapshot_times;  // full FieldState kept
  double blowup_factor = 10.0;
  int K = 3;
  bool lemma_check = true;
  double lemma_after = 2.0;  // skip the stiff initial transient
  double noise_floor = 1e-11;  // relative to |u~|_inf, for boundary ratios
};

struct TrajectorySample {
  double t = 0.0;
  double v_l2 = 0, v_linf = 0, v_hk = 0, v_l2sq = 0;
  double v_l1 = 0;
  double psix_l2 = 0, psix_linf = 0, psit_l2 = 0, psit_linf = 0, grad_hk = 0;
  double grad_l1 = 0, grad_l2 = 0, grad_linf = 0;  // pointwise |(psi_x, psi_t)|
  double psi_linf = 0;
  double triple_hk = 0;  // |(v, psi_t, psi_x)|_{H^K}
  double triple_h3 = 0;
  double u_minus_ubar_linf = 0;
  double psix_max = 0;
  double boundary_ratio = 0;
  double N_l1h1 = 0;
  double lemma_residual = -1, lemma_scale = 0;
  double gauge_error = 0;
  int extraction_iterations = 0;
};

struct Trajectory {
  Grid grid;
  double E0 = 0.0;
  double h0_linf = 0.0;
  double dt = 0.0;
  int K = 3;
  std::vector<TrajectorySample> samples;
  std::vector<FieldState> snapshots;
  std::vector<std::string> flags;
};

Trajectory simulate(const ReactionSystem& system, const WaveProfile& profile, const FieldState& initial,
                    const SimulationConfig& config);

// Fornberg weights for the first derivative at x0 from nodes x.
std::vector<double> fd_weights(const std::vector<double>& x, double x0);

// --- diagnostics ------------------------------------------------------------

struct DampingReport {
  double C = 0.0;
  bool regime_ok = true;
  bool bound_ok = true;
  std::vector<double> t, lhs, rhs;
  std::string note;
};

DampingReport damping_diagnostic(const Trajectory& trajectory, double theta, double ceiling = 1e4,
                                 double small_threshold = 0.05);

struct ZetaTrace {
  std::vector<double> t, zeta;
  double C = 0.0;
  double sup = 0.0;
};

ZetaTrace zeta_trace(const Trajectory& trajectory);

struct TheoremSuite {
  std::vector<DecayFit> fits;  // v and grad psi per p
  double psi_linf_min_ratio = 0, psi_linf_max_ratio = 0;  // over the window, relative to t = 0
  double u_minus_ubar_max = 0;
  double max_boundary_ratio = 0;
  bool regime_ok = true;
};

TheoremSuite theorem_decay_suite(const Trajectory& trajectory, const std::vector<double>& p_list, double t_min = 10.0,
                                 double t_max = 1000.0);

// --- Duhamel iteration ------------------------------------------------------

struct DuhamelOptions {
  double horizon = 20.0;
  double dt = 0.1;
  int n_iter = 5;
  std::vector<double> output_times;
};

struct DuhamelResult {
  std::vector<double> times;
  std::vector<Vec> psi;
  std::vector<Vec> psi_t;
  std::vector<Field> v;
  std::vector<double> successive_diff;  // sup_t |iterate p - iterate p-1|_inf
  int iterations = 0;
};

DuhamelResult duhamel_iterate(const PropagatorPlan& plan, const ReactionSystem& system, const ModulationData& h,
                              const Field& d0, const DuhamelOptions& options);

}  // namespace modwave
