#pragma once

#include "modwave/bloch.hpp"
#include "modwave/common.hpp"
#include "modwave/profile.hpp"
#include "modwave/spectral.hpp"

#include <string>
#include <utility>
#include <vector>

namespace modwave {

struct PropagatorOptions {
  int jobs = 0;
  // Negative: use the summary's xi0. Zero forces alpha == 0.
  double xi0_override = -1.0;
};

// Bloch data of e^{tL} on an N-period torus, stored as per-frequency
// eigendecompositions L_xi = V diag(Lambda) V^{-1}.
class PropagatorPlan {
 public:
  PropagatorPlan(const WaveProfile& profile, int periods, const PropagatorOptions& options = {});

  const WaveProfile& profile() const { return profile_; }
  const Grid& grid() const { return grid_; }
  const SpectralSummary& summary() const { return scan_.summary; }
  const std::vector<BlochBranch>& branches() const { return scan_.branches; }
  const FloquetEigen& eigen(int r) const { return scan_.eigen[r]; }
  const Vec& alpha() const { return alpha_; }
  const Vec& xi() const { return scan_.xi; }
  double xi0() const { return xi0_; }
  const CVec& phi0() const { return phi0_; }
  int zero_index() const { return scan_.zero_index; }

  // Cutoff alpha at an arbitrary frequency.
  double cutoff(double xi) const;

  // Dense e^{t L_xi} at frequency node r.
  Eigen::MatrixXcd exp_tL(int r, double t) const;

  // Eigen-coordinates z_r = V_r^{-1} g(xi_r) of a Bloch field.
  CField coordinates(const BlochField& g) const;
  CField coordinates(const Field& g) const;

  // Field profile u' tiled over the torus.
  Field tiled_derivative() const;

 private:
  WaveProfile profile_;
  Grid grid_;
  SpectralScan scan_;
  Vec alpha_;
  double xi0_ = 0.0;
  CVec phi0_;
};

// Each operator accepts either a grid function or precomputed coordinates;
// l counts x-derivatives and m t-derivatives of the output.
Field apply_S(const PropagatorPlan& plan, const Field& g, double t, int l = 0, int m = 0);
Field apply_S(const PropagatorPlan& plan, const CField& z, double t, int l = 0, int m = 0);

Vec apply_sp(const PropagatorPlan& plan, const Field& g, double t, int l = 0, int m = 0);
Vec apply_sp(const PropagatorPlan& plan, const CField& z, double t, int l = 0, int m = 0);

Field apply_S_tilde(const PropagatorPlan& plan, const Field& g, double t, int l = 0, int m = 0);
Field apply_S_tilde(const PropagatorPlan& plan, const CField& z, double t, int l = 0, int m = 0);

// Bloch-space scalar sigma_r = alpha e^{lambda t} lambda^m <phi_tilde, g(xi_r)>
// (without the (i xi)^l factor).
CVec sp_symbol(const PropagatorPlan& plan, const CField& z, double t, int m = 0);

// ---------------------------------------------------------------------------
// Decay measurements.

struct DecayFit {
  std::string label;
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double p = 0.0;
  std::vector<std::pair<double, double>> series;
  double max_boundary_ratio = 0.0;
  bool degenerate = false;
  bool claimed = true;
  double predicted = 0.0;  // guide slope for plots
};

std::vector<double> geometric_grid(double t0, double t1, int per_decade = 24);

// Least squares of log(norm) against log(1+t) over [t_min, t_max].
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& norms, double p, double t_min,
                   double t_max);

enum class Shape { step, gaussian_integral, custom };

struct ModulationData {
  Grid grid;
  int K = 3;
  Vec h0;
  Vec dx_h0;
  double norm_dx_l1_hk1 = 0.0;  // |d_x h0|_{L^1 cap H^{K+1}}

  static ModulationData from_samples(const Grid& grid, const Vec& h0, int K = 3);
  // Plateau rising at `left` and falling at `right` with transition width `width`.
  static ModulationData plateau(const Grid& grid, Shape shape, double amplitude, double width, double left,
                                double right, int K = 3);

  // h0(x) u'(x) on the torus.
  Field times_derivative(const PropagatorPlan& plan) const;
};

enum class Operator { sp, S_tilde, S };

struct ExperimentOptions {
  double boundary_tolerance = 1e-6;
  bool allow_unclaimed = false;
};

// Norm series of d_x^l d_t^m (op)(t) g over t_grid, fitted over the whole grid.
DecayFit decay_experiment(const PropagatorPlan& plan, const Field& g, const std::vector<double>& t_grid, Operator op,
                          int l, int m, double p, const ExperimentOptions& options = {});

DecayFit modulational_experiment(const PropagatorPlan& plan, const ModulationData& h, const std::vector<double>& t_grid,
                                 int l, int m, double p, const ExperimentOptions& options = {});
DecayFit modulational_Stilde_experiment(const PropagatorPlan& plan, const ModulationData& h,
                                        const std::vector<double>& t_grid, int l, int m, double p,
                                        const ExperimentOptions& options = {});

struct InitialLayerRow {
  double t = 0.0;
  double Sp_minus_id = 0.0;   // |(S^p(t) - Id)(h0 u')|_p
  double sp_minus_h0 = 0.0;   // |s^p(t)(h0 u') - h0|_p
  double Sp_d0 = 0.0;         // |S^p(t) d0|_p
};

struct InitialLayerTable {
  double p = inf;
  std::vector<InitialLayerRow> rows;
  double norm_l1_h1 = 0.0;  // |d_x h0|_{L^1} + |d_x h0|_{H^1}
  double norm_l1_l2 = 0.0;  // |d_x h0|_{L^1} + |d_x h0|_{L^2}
  double C_Sp = 0.0;        // sup_t first column / norm_l1_h1
  double C_sp = 0.0;        // sup_t second column / norm_l1_l2
  double limit_error = 0.0; // |(S^p(0) - Id)(h0 u') + S~(0)(h0 u')|_inf

};

InitialLayerTable initial_layer_check(const PropagatorPlan& plan, const ModulationData& h, const Field& d0,
                                      const std::vector<double>& t_grid, double p = inf);

// Response of s^p(t) to a unit-mass delta at y in each component (column c).
Field kernel_probe(const PropagatorPlan& plan, double y, double t);

}  // namespace modwave
