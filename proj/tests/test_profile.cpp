#include "modwave/bloch.hpp"
#include "modwave/dynamics.hpp"
#include "modwave/profile.hpp"
#include "modwave/spectral.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace modwave;
using namespace modwave::testing;

namespace {

// Direct trigonometric interpolation, independent of the FFT path.
Vec trig_interpolate(const Field& values, double y) {
  const int M = static_cast<int>(values.rows());
  Vec out = Vec::Zero(values.cols());
  for (int c = 0; c < values.cols(); ++c) {
    double s = 0.0;
    for (int m = -M / 2; m <= M / 2; ++m) {
      cplx coef = 0.0;
      for (int i = 0; i < M; ++i) coef += values(i, c) * std::polar(1.0, -two_pi * m * i / M);
      coef /= M;
      const double w = (std::abs(m) == M / 2) ? 0.5 : 1.0;
      s += w * (coef * std::polar(1.0, two_pi * m * y)).real();
    }
    out(c) = s;
  }
  return out;
}

}  // namespace

TEST(Profile, RecoversClosedFormWaveTrain) {
  const LambdaOmegaParams& p = spectral_params();
  const WaveProfile& w = spectral_profile();
  EXPECT_LE(w.residual_norm, 1e-10);
  EXPECT_NEAR(w.c, p.c(), 1e-10);
  // Gauge: first harmonic of component 0 real and positive, i.e. r0 (cos, sin).
  EXPECT_LE((w.values - lambda_omega_profile(p, 32)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Profile, PeriodicInterpolation) {
  const WaveProfile& w = dynamic_profile();
  for (double y : {0.013, 0.31, 0.77}) {
    const Vec a = trig_interpolate(w.values, y), b = trig_interpolate(w.values, y + 1.0);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
    Vec ys(1);
    ys << y + 1.0;
    EXPECT_LE((evaluate_profile(w, ys).row(0).transpose() - a).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Profile, DerivativeIsSpectral) {
  const WaveProfile& w = dynamic_profile();
  // Independent oracle: differentiate the closed form.
  const LambdaOmegaParams& p = dynamic_params();
  double err = 0.0;
  for (int i = 0; i < w.M; ++i) {
    const double th = two_pi * i / w.M;
    err = std::max(err, std::abs(w.deriv(i, 0) + two_pi * p.r0() * std::sin(th)));
    err = std::max(err, std::abs(w.deriv(i, 1) - two_pi * p.r0() * std::cos(th)));
  }
  EXPECT_LE(err, 1e-10);
}

TEST(Profile, ExactGuessConvergesInOneStep) {
  const LambdaOmegaParams& p = spectral_params();
  ProfileOptions opt;
  opt.c_guess = p.c();
  const WaveProfile w = solve_profile(make_lambda_omega(p), p.k(), lambda_omega_profile(p, 64), 64, opt);
  EXPECT_EQ(w.newton_iterations, 1);
  EXPECT_LE(w.last_correction, 1e-12);
}

TEST(Profile, ConstantGuessIsSingular) {
  const LambdaOmegaParams& p = spectral_params();
  const Field guess = Field::Constant(32, 2, 0.3);
  EXPECT_THROW(solve_profile(make_lambda_omega(p), p.k(), guess, 32), SingularJacobian);
}

TEST(Profile, SmallModeCountIsRejected) {
  const LambdaOmegaParams& p = spectral_params();
  EXPECT_THROW(solve_profile(make_lambda_omega(p), p.k(), lambda_omega_profile(p, 16), 16), InvalidParameter);
}

// Property: any translate of a perturbed guess lands on the same gauge.
TEST(Profile, TranslationGauge) {
  const LambdaOmegaParams& p = dynamic_params();
  const ReactionSystem sys = make_lambda_omega(p);
  const WaveProfile& ref = dynamic_profile();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> shift(0.0, 1.0), wiggle(-0.05, 0.05);
  for (int trial = 0; trial < 8; ++trial) {
    Field guess = lambda_omega_profile(p, 32, shift(rng));
    for (int i = 0; i < 32; ++i) guess(i, 0) += wiggle(rng) * std::cos(two_pi * 2 * i / 32);
    ProfileOptions opt;
    opt.c_guess = p.c() * (1.0 + wiggle(rng));
    const WaveProfile w = solve_profile(sys, p.k(), guess, 32, opt);
    EXPECT_LE((w.values - ref.values).cwiseAbs().maxCoeff(), 1e-8) << trial;
    // Phase condition: orthogonality of component 0 to sin(2 pi x).
    double phase = 0.0;
    for (int i = 0; i < 32; ++i) phase += w.values(i, 0) * std::sin(two_pi * i / 32) / 32;
    EXPECT_LE(std::abs(phase), 1e-12);
  }
}

TEST(Profile, SpectralConvergenceUnderRefinement) {
  const WaveProfile coarse = solve_lambda_omega(spectral_params(), 32);
  const WaveProfile fine = solve_lambda_omega(spectral_params(), 64);
  double diff = 0.0;
  for (int i = 0; i < 32; ++i) diff = std::max(diff, (coarse.values.row(i) - fine.values.row(2 * i)).cwiseAbs().maxCoeff());
  EXPECT_LE(diff, 1e-10);
  EXPECT_LE(std::abs(coarse.c - fine.c), 1e-10);
}

TEST(Profile, LinearizationAnnihilatesDerivative) {
  const WaveProfile& w = spectral_profile();
  const BlochOperatorMatrix L = assemble_L_xi(w, 0.0);
  const CVec phi = mode_coefficients(w.deriv);
  EXPECT_LE((L.scaled * phi).cwiseAbs().maxCoeff() / phi.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Family, DispersionRelationAndClosedFormSpeed) {
  const LambdaOmegaParams& p = dynamic_params();
  const ReactionSystem sys = make_lambda_omega(p);
  const ProfileFamily fam = continue_family(sys, dynamic_profile(), 0.002, 3);
  ASSERT_EQ(fam.profiles.size(), 7u);
  ASSERT_EQ(fam.k_grid.size(), 7u);
  EXPECT_EQ(fam.base_index, 3);
  for (size_t i = 0; i < fam.k_grid.size(); ++i) {
    const double k = fam.k_grid[i];
    EXPECT_NEAR(k, p.k() + (static_cast<int>(i) - 3) * 0.002, 1e-14);
    EXPECT_EQ(fam.omega_of_k[i], -fam.c_of_k[i] * k);
    const LambdaOmegaParams member{p.beta, two_pi * k};
    EXPECT_NEAR(fam.c_of_k[i], member.c(), 1e-8);
    EXPECT_LE(fam.profiles[i].residual_norm, 1e-10);
    EXPECT_DOUBLE_EQ(fam.profiles[i].k_star, k);
  }
  // Centered difference of the closed-form profile family in k.
  const int b = fam.base_index;
  const Field up = lambda_omega_profile({p.beta, two_pi * (p.k() + 0.002)}, 32);
  const Field dn = lambda_omega_profile({p.beta, two_pi * (p.k() - 0.002)}, 32);
  EXPECT_LE((fam.dk_profile[b] - (up - dn) / 0.004).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Family, ZeroStepsIsBaseOnly) {
  const ProfileFamily fam = continue_family(make_lambda_omega(dynamic_params()), dynamic_profile(), 0.002, 0);
  ASSERT_EQ(fam.profiles.size(), 1u);
  EXPECT_EQ(fam.k_grid[0], dynamic_profile().k_star);
}
