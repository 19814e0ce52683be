#include "modwave/dynamics.hpp"
#include "modwave/fft.hpp"
#include "modwave/propagator.hpp"
#include "modwave/spectral.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace modwave;
using namespace modwave::testing;

namespace {

Field random_localized(std::mt19937_64& rng) {
  const Grid& g = small_plan().grid();
  std::uniform_real_distribution<double> where(28.0, 36.0), width(0.5, 2.0);
  return gaussian_field(g, 2, where(rng), width(rng), rng);
}

double max_abs(const Field& f) { return f.cwiseAbs().maxCoeff(); }

Field times_profile_derivative(const Vec& s) {
  Field out = small_plan().tiled_derivative();
  for (int c = 0; c < out.cols(); ++c) out.col(c).array() *= s.array();
  return out;
}

}  // namespace

TEST(Propagator, IdentityAtTimeZero) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Field g = random_localized(rng);
    EXPECT_LE(max_abs(apply_S(small_plan(), g, 0.0) - g), 1e-10 * max_abs(g));
  }
}

TEST(Propagator, Semigroup) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> time(0.1, 5.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Field g = random_localized(rng);
    const double t = time(rng), s = time(rng);
    const Field a = apply_S(small_plan(), apply_S(small_plan(), g, s), t);
    const Field b = apply_S(small_plan(), g, t + s);
    EXPECT_LE(max_abs(a - b), 1e-8 * max_abs(g));
  }
}

TEST(Propagator, TranslationModeIsInvariant) {
  const Field up = small_plan().tiled_derivative();
  for (double t : {0.5, 7.0, 40.0}) EXPECT_LE(max_abs(apply_S(small_plan(), up, t) - up), 1e-8);
}

TEST(Propagator, SingleBlochModeEvolvesByItsEigenvalue) {
  const PropagatorPlan& P = small_plan();
  const LambdaOmegaParams& p = dynamic_params();
  const Grid& g = P.grid();
  for (int r : {33, 36, 40}) {
    const double xi = P.xi()(r);
    const CField per = mode_synthesis(P.branches()[r].phi, 2, g.points);
    Field data(g.size(), 2);
    for (int i = 0; i < g.size(); ++i)
      for (int c = 0; c < 2; ++c) data(i, c) = (std::polar(1.0, xi * g.x(i)) * per(i % g.points, c)).real();
    const cplx lam = exact_dispersion_lambda_omega(p, xi).first / p.k();
    const double t = 3.0;
    Field expect(g.size(), 2);
    for (int i = 0; i < g.size(); ++i)
      for (int c = 0; c < 2; ++c)
        expect(i, c) = (std::exp(lam * t) * std::polar(1.0, xi * g.x(i)) * per(i % g.points, c)).real();
    EXPECT_LE(max_abs(apply_S(P, data, t) - expect), 1e-6 * max_abs(data)) << r;
  }
}

TEST(Propagator, DecompositionIsExact) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Field g = random_localized(rng);
    for (double t : {0.0, 0.7, 12.0}) {
      const Field S = apply_S(small_plan(), g, t);
      const Field rebuilt = times_profile_derivative(apply_sp(small_plan(), g, t)) + apply_S_tilde(small_plan(), g, t);
      EXPECT_LE(max_abs(S - rebuilt), 1e-8 * max_abs(g));
    }
  }
}

TEST(Propagator, TimeDerivativeOfPhaseSymbol) {
  std::mt19937_64 rng(4);
  const Field g = random_localized(rng);
  const CField z = small_plan().coordinates(g);
  const double t = 5.0;
  const Vec exact = apply_sp(small_plan(), z, t, 0, 1);
  double prev = 0.0;
  for (double dt : {2e-2, 1e-2}) {
    const Vec fd = (apply_sp(small_plan(), z, t + dt) - apply_sp(small_plan(), z, t - dt)) / (2 * dt);
    const double err = (fd - exact).cwiseAbs().maxCoeff();
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.4);
    prev = err;
  }
  EXPECT_LE(prev, 1e-4 * exact.cwiseAbs().maxCoeff());
}

TEST(Propagator, DerivativeTrading) {
  // d_t s^p carries lambda; d_x s^p carries i xi.  Both match spectral and
  // finite-difference derivatives of the base output.
  std::mt19937_64 rng(5);
  const Field g = random_localized(rng);
  const Vec s = apply_sp(small_plan(), g, 4.0);
  const Vec sx = apply_sp(small_plan(), g, 4.0, 1, 0);
  EXPECT_LE((derivative(s, small_plan().grid().length(), 1) - sx).cwiseAbs().maxCoeff(), 1e-10 * sx.cwiseAbs().maxCoeff());
}

TEST(Propagator, ZeroCutoffHook) {
  PropagatorOptions opt;
  opt.xi0_override = 0.0;
  const PropagatorPlan P(dynamic_profile(), 64, opt);
  std::mt19937_64 rng(6);
  const Field g = random_localized(rng);
  EXPECT_EQ(apply_sp(P, g, 2.0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(max_abs(apply_S_tilde(P, g, 2.0) - apply_S(P, g, 2.0)), 1e-12 * max_abs(g));
}

TEST(Propagator, ResidualPartOfTranslationModeVanishes) {
  const Field up = small_plan().tiled_derivative();
  for (double t : {0.0, 1.0, 10.0}) EXPECT_LE(max_abs(apply_S_tilde(small_plan(), up, t)), 1e-10);
}

TEST(Cutoff, ShapeAndSymmetry) {
  const PropagatorPlan& P = small_plan();
  const double x0 = P.xi0();
  EXPECT_EQ(P.cutoff(0.0), 1.0);
  EXPECT_EQ(P.cutoff(x0), 1.0);
  EXPECT_EQ(P.cutoff(-x0), 1.0);
  EXPECT_EQ(P.cutoff(2.0 * x0), 0.0);
  EXPECT_EQ(P.cutoff(pi), 0.0);
  double prev = 1.0;
  for (int i = 0; i <= 200; ++i) {
    const double xi = x0 * (1.0 + i / 200.0);
    EXPECT_LE(P.cutoff(xi), prev);
    EXPECT_EQ(P.cutoff(xi), P.cutoff(-xi));
    prev = P.cutoff(xi);
  }
  EXPECT_NEAR(P.cutoff(1.5 * x0), 0.5, 1e-15);
  // Flat to all orders at the ends of the transition.
  EXPECT_LT(1.0 - P.cutoff(x0 * 1.02), 1e-20);
  EXPECT_LT(P.cutoff(x0 * 1.98), 1e-20);
}

TEST(Propagator, PlanPreconditions) {
  EXPECT_THROW(PropagatorPlan(dynamic_profile(), 32), InvalidParameter);
  EXPECT_THROW(PropagatorPlan(dynamic_profile(), 96), InvalidParameter);
}

TEST(Modulation, DerivativeAndLocalization) {
  const Grid g{64, 32};
  const double amp = 0.3, w = 1.5, left = 24.0, right = 36.0;
  const ModulationData h = ModulationData::plateau(g, Shape::gaussian_integral, amp, w, left, right);
  double err = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double x = g.x(i), a = (x - left) / w, b = (x - right) / w;
    const double exact = amp / (w * std::sqrt(pi)) * (std::exp(-a * a) - std::exp(-b * b));
    err = std::max(err, std::abs(h.dx_h0(i) - exact));
  }
  EXPECT_LE(err, 1e-10);
  EXPECT_GT(h.norm_dx_l1_hk1, 0.0);
}

TEST(Modulation, PeriodicDataIsRejected) {
  const Grid g{64, 32};
  Vec h0(g.size());
  for (int i = 0; i < g.size(); ++i) h0(i) = 0.1 * std::sin(two_pi * g.x(i));
  EXPECT_THROW(ModulationData::from_samples(g, h0), PreconditionViolation);
}

TEST(Modulation, ZeroDataGivesZero) {
  const Grid& g = small_plan().grid();
  const ModulationData h = ModulationData::from_samples(g, Vec::Zero(g.size()));
  for (double t : {1.0, 10.0}) EXPECT_EQ(apply_sp(small_plan(), h.times_derivative(small_plan()), t).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Modulation, UnclaimedNormNeedsOptIn) {
  const Grid& g = small_plan().grid();
  const ModulationData h = ModulationData::plateau(g, Shape::gaussian_integral, 0.1, 1.0, 28, 36);
  EXPECT_THROW(modulational_experiment(small_plan(), h, {1.0, 2.0}, 0, 0, 2.0), PreconditionViolation);
  ExperimentOptions opt;
  opt.allow_unclaimed = true;
  opt.boundary_tolerance = 1e-3;  // 64 periods is a short domain for an undifferentiated plateau
  const DecayFit f = modulational_experiment(small_plan(), h, {1.0, 2.0}, 0, 0, 2.0, opt);
  EXPECT_FALSE(f.claimed);
  EXPECT_THROW(modulational_Stilde_experiment(small_plan(), h, {1.0}, 0, 3, inf), PreconditionViolation);
}

// Property: the high-pass part of the modulation decays at least 0.4 faster.
TEST(Modulation, HighFrequencyPartDecaysFaster) {
  const PropagatorPlan& P = small_plan();
  const Grid& g = P.grid();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> amp(0.05, 0.2), freq(0.2, 0.4);
  for (int trial = 0; trial < 3; ++trial) {
    Vec h0 = ModulationData::plateau(g, Shape::gaussian_integral, amp(rng), 1.0, 28, 36).h0;
    const double f = freq(rng);
    for (int i = 0; i < g.size(); ++i) {
      const double s = (g.x(i) - 32.0) / 3.0;
      h0(i) += amp(rng) * std::exp(-s * s) * std::cos(two_pi * f * g.x(i));
    }
    // Split at |kappa| = 2 pi * 0.1 with a sharp spectral mask.
    CVec hat = rfft(h0);
    for (int m = 0; m < hat.size(); ++m)
      if (two_pi * m / g.length() >= two_pi * 0.1) hat(m) = 0.0;
    const Vec low = irfft(hat, g.size()), high = h0 - low;
    std::vector<double> t = geometric_grid(3.0, 30.0, 12), nl, nh;
    const CField zl = P.coordinates(times_profile_derivative(low));
    const CField zh = P.coordinates(times_profile_derivative(high));
    for (double tt : t) {
      nl.push_back(apply_sp(P, zl, tt).cwiseAbs().maxCoeff());
      nh.push_back(apply_sp(P, zh, tt).cwiseAbs().maxCoeff());
    }
    const DecayFit fl = fit_decay(t, nl, inf, 3.0, 30.0), fh = fit_decay(t, nh, inf, 3.0, 30.0);
    EXPECT_LE(fh.exponent, fl.exponent - 0.4) << "trial " << trial;
  }
}

// Property: fitted exponents do not depend on the domain size.
TEST(Modulation, ExponentsStableUnderDomainDoubling) {
  const PropagatorPlan big(dynamic_profile(), 128);
  const std::vector<double> t = geometric_grid(10.0, 60.0, 12);
  ExperimentOptions opt;
  opt.boundary_tolerance = 1e-3;
  auto exponents = [&](const PropagatorPlan& P) {
    const Grid& g = P.grid();
    const double mid = g.length() / 2;
    const ModulationData h = ModulationData::plateau(g, Shape::gaussian_integral, 0.1, 1.0, mid - 6, mid + 4);
    std::vector<double> out;
    out.push_back(modulational_experiment(P, h, t, 1, 0, inf, opt).exponent);
    out.push_back(modulational_Stilde_experiment(P, h, t, 0, 0, inf, opt).exponent);
    std::mt19937_64 rng(8);
    const Field bump = gaussian_field(g, 2, mid, 0.7, rng);
    out.push_back(decay_experiment(P, bump, t, Operator::sp, 0, 0, inf, opt).exponent);
    return out;
  };
  const auto a = exponents(small_plan()), b = exponents(big);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 0.03) << i;
}

TEST(InitialLayer, ConstantShiftIsPureTranslation) {
  const Grid& g = small_plan().grid();
  const ModulationData h = ModulationData::from_samples(g, Vec::Constant(g.size(), 0.2));
  const Field d0 = Field::Zero(g.size(), 2);
  const InitialLayerTable tab = initial_layer_check(small_plan(), h, d0, {0.1, 0.5, 1.0});
  for (const auto& row : tab.rows) {
    EXPECT_LE(row.sp_minus_h0, 1e-10);
    EXPECT_LE(row.Sp_minus_id, 1e-10);
  }
}

TEST(InitialLayer, LimitAndBoundedConstants) {
  const Grid& g = small_plan().grid();
  const ModulationData h = ModulationData::plateau(g, Shape::gaussian_integral, 0.1, 1.0, 26, 36);
  std::mt19937_64 rng(9);
  const Field d0 = gaussian_field(g, 2, 32.0, 0.5, rng);
  std::vector<double> t;
  for (int i = 1; i <= 10; ++i) t.push_back(0.1 * i);
  const InitialLayerTable tab = initial_layer_check(small_plan(), h, d0, t);
  EXPECT_LE(tab.limit_error, 1e-8);
  EXPECT_TRUE(std::isfinite(tab.C_Sp));
  EXPECT_TRUE(std::isfinite(tab.C_sp));
  EXPECT_THROW(initial_layer_check(small_plan(), h, d0, {1.5}), PreconditionViolation);
}

TEST(Kernel, MassIsConserved) {
  const Field e1 = kernel_probe(small_plan(), 32.0, 1.0);
  const double h = small_plan().grid().h();
  for (double t : {3.0, 10.0, 30.0, 100.0}) {
    const Field e = kernel_probe(small_plan(), 32.0, t);
    for (int c = 0; c < 2; ++c) {
      const double m1 = e1.col(c).sum() * h, m = e.col(c).sum() * h;
      EXPECT_NEAR(m, m1, 0.01 * std::abs(m1) + 1e-12) << t;
    }
  }
}

TEST(Kernel, UnitTranslation) {
  const PropagatorPlan& P = small_plan();
  const int M = P.grid().points, L = P.grid().size();
  const Field a = kernel_probe(P, 30.25, 5.0), b = kernel_probe(P, 31.25, 5.0);
  double err = 0.0;
  for (int i = 0; i < L; ++i) err = std::max(err, (b.row((i + M) % L) - a.row(i)).cwiseAbs().maxCoeff());
  EXPECT_LE(err, 1e-8 * a.cwiseAbs().maxCoeff());
}

TEST(Kernel, HeatKernelDecayUniformInSource) {
  const PropagatorPlan& P = small_plan();
  const std::vector<double> t = geometric_grid(10.0, 100.0, 12);
  std::vector<double> C;
  for (double y : {20.0, 20.2, 20.45, 20.7, 20.9}) {
    std::vector<double> n;
    double c = 0.0;
    for (double tt : t) {
      // Both source components together: a single one vanishes where phi~ does.
      n.push_back(kernel_probe(P, y, tt).cwiseAbs().maxCoeff());
      c = std::max(c, n.back() * std::sqrt(1.0 + tt));
    }
    C.push_back(c);
    EXPECT_NEAR(fit_decay(t, n, inf, 10.0, 100.0).exponent, -0.5, 0.1) << y;
  }
  EXPECT_LT(*std::max_element(C.begin(), C.end()) / *std::min_element(C.begin(), C.end()), 3.0);
  EXPECT_THROW(kernel_probe(P, 20.0, 0.0), PreconditionViolation);
}

TEST(DecayFit, RecoversPowerLaw) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> slope(-1.5, 0.0), noise(-0.01, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    const double s = slope(rng);
    const std::vector<double> t = geometric_grid(10.0, 1000.0, 24);
    std::vector<double> n;
    for (double tt : t) n.push_back(3.0 * std::pow(1.0 + tt, s) * (1.0 + noise(rng)));
    const DecayFit f = fit_decay(t, n, 2.0, 10.0, 1000.0);
    EXPECT_NEAR(f.exponent, s, 0.01);
    EXPECT_GE(f.r_squared, s < -0.1 ? 0.98 : 0.0);
    EXPECT_EQ(f.series.size(), t.size());
  }
  EXPECT_EQ(geometric_grid(10.0, 1000.0, 24).size(), 49u);
  const DecayFit bad = fit_decay({1.0, 2.0}, {1.0, 0.0}, inf, 1.0, 2.0);
  EXPECT_TRUE(bad.degenerate);
}
