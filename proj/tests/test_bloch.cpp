#include "modwave/bloch.hpp"
#include "modwave/dynamics.hpp"
#include "modwave/spectral.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace modwave;
using namespace modwave::testing;

namespace {

CField random_field(const Grid& g, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CField f(g.size(), n);
  for (int i = 0; i < f.rows(); ++i)
    for (int c = 0; c < n; ++c) f(i, c) = cplx(normal(rng), normal(rng));
  return f;
}

const SpectralScan& scan64() {
  static const SpectralScan s = spectrum_scan(spectral_profile(), 64);
  return s;
}

}  // namespace

TEST(Bloch, RoundTripRandomFields) {
  std::mt19937_64 rng(1);
  for (const Grid g : {Grid{64, 16}, Grid{128, 32}}) {
    for (int trial = 0; trial < 5; ++trial) {
      const CField f = random_field(g, 2, rng);
      const CField back = bloch_inverse_complex(bloch_forward(f, g));
      EXPECT_LE((back - f).cwiseAbs().maxCoeff(), 1e-12);
      const Field re = f.real();
      EXPECT_LE((bloch_inverse(bloch_forward(re, g)) - re).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Bloch, Parseval) {
  std::mt19937_64 rng(2);
  const Grid g{64, 32};
  for (int trial = 0; trial < 5; ++trial) {
    const CField f = random_field(g, 2, rng);
    const double lhs = f.cwiseAbs2().sum() * g.h();
    const BlochField b = bloch_forward(f, g);
    // L^2[0,1] norm of each check function from its samples, then xi quadrature.
    double rhs = 0.0;
    for (int r = 0; r < b.periods; ++r) rhs += bloch_column_samples(b, r).cwiseAbs2().sum() / g.points * b.dxi();
    EXPECT_NEAR(lhs, two_pi * rhs, 1e-10 * lhs);
  }
}

TEST(Bloch, PeriodicHarmonicSitsAtZero) {
  const Grid g{64, 16};
  CField f(g.size(), 1);
  for (int i = 0; i < g.size(); ++i) f(i, 0) = std::polar(1.0, two_pi * g.x(i));
  const BlochField b = bloch_forward(f, g);
  const int r0 = g.periods / 2;
  EXPECT_NEAR(b.xi(r0), 0.0, 1e-15);
  for (int r = 0; r < b.periods; ++r)
    for (int j = -8; j < 8; ++j) {
      const double expect = (r == r0 && j == 1) ? 1.0 / b.dxi() : 0.0;
      EXPECT_NEAR(std::abs(b.coeffs(b.index(0, j), r)), expect, 1e-10) << r << " " << j;
    }
}

TEST(Bloch, ProfileDerivativeConcentratesAtZero) {
  const WaveProfile& w = dynamic_profile();
  const Grid g{64, w.M};
  const BlochField b = bloch_forward(tile(w.deriv, g), g);
  const CVec phi0 = mode_coefficients(w.deriv);
  for (int r = 0; r < b.periods; ++r) {
    const CVec col = b.coeffs.col(r);
    if (r == g.periods / 2)
      EXPECT_LE((col * b.dxi() - phi0).cwiseAbs().maxCoeff(), 1e-12);
    else
      EXPECT_LE(col.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Bloch, InverseOfZeroAndOfASingleNode) {
  const Grid g{64, 16};
  BlochField b = zero_bloch_field(g, 1);
  EXPECT_EQ(bloch_inverse_complex(b).cwiseAbs().maxCoeff(), 0.0);
  const int r = 40;
  b.coeffs(b.index(0, 0), r) = 1.0;
  const CField f = bloch_inverse_complex(b);
  double err = 0.0;
  for (int i = 0; i < g.size(); ++i) err = std::max(err, std::abs(f(i, 0) - b.dxi() * std::polar(1.0, b.xi(r) * g.x(i))));
  EXPECT_LE(err, 1e-13);
}

TEST(Bloch, HausdorffYoungInfinityOne) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  const Grid g{64, 16};
  for (int trial = 0; trial < 100; ++trial) {
    BlochField b = zero_bloch_field(g, 1);
    for (int r = 0; r < b.periods; ++r)
      for (int j = -4; j <= 4; ++j) b.coeffs(b.index(0, j), r) = cplx(normal(rng), normal(rng)) / (1.0 + j * j);
    const double lhs = bloch_inverse_complex(b).cwiseAbs().maxCoeff();
    double rhs = 0.0;
    for (int r = 0; r < b.periods; ++r) rhs += bloch_column_samples(b, r).cwiseAbs().maxCoeff() * b.dxi();
    EXPECT_LE(lhs, rhs * (1.0 + 1e-12));
  }
}

TEST(Bloch, SizeChecks) {
  EXPECT_THROW(bloch_forward(Field(Field::Zero(100, 1)), Grid{64, 16}), SizeMismatch);
  EXPECT_THROW(bloch_forward(Field(Field::Zero(48 * 16, 1)), Grid{48, 16}), SizeMismatch);
}

TEST(FloquetMatrix, ConstantCoefficientIsDiagonal) {
  WaveProfile w;
  w.k_star = 0.3;
  w.c = 0.7;
  w.M = 16;
  w.n = 1;
  w.values = Field::Zero(16, 1);
  w.b_coeff = Field::Constant(16, 1, -0.4);
  const double xi = 0.9;
  const BlochOperatorMatrix L = assemble_L_xi(w, xi);
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      const cplx eta(0.0, two_pi * (a - 8) + xi);
      const cplx expect = a == b ? w.k_star * w.k_star * eta * eta + w.k_star * w.c * eta - 0.4 : cplx(0.0);
      EXPECT_LE(std::abs(L.scaled(a, b) - expect), 1e-13);
    }
}

TEST(FloquetMatrix, ReflectionSymmetry) {
  const WaveProfile& w = spectral_profile();
  const int M = w.M;
  for (double xi : {0.3, 1.7}) {
    const auto A = assemble_L_xi(w, xi).scaled, B = assemble_L_xi(w, -xi).scaled;
    double err = 0.0;
    for (int c1 = 0; c1 < w.n; ++c1)
      for (int c2 = 0; c2 < w.n; ++c2)
        for (int j1 = -M / 2 + 1; j1 < M / 2; ++j1)
          for (int j2 = -M / 2 + 1; j2 < M / 2; ++j2)
            err = std::max(err, std::abs(A(c1 * M + j1 + M / 2, c2 * M + j2 + M / 2) -
                                         std::conj(B(c1 * M - j1 + M / 2, c2 * M - j2 + M / 2))));
    EXPECT_LE(err, 1e-13);
  }
}

TEST(FloquetMatrix, EigenvaluesContainClosedFormBranches) {
  const WaveProfile& w = spectral_profile();
  const LambdaOmegaParams& p = spectral_params();
  double worst = 0.0;
  for (int r = 0; r < 64; ++r) {
    const double xi = -pi + two_pi * r / 64;
    const CVec ev = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(assemble_L_xi(w, xi).scaled, false).eigenvalues();
    for (int j = -4; j <= 4; ++j) {
      const auto [l1, l2] = exact_dispersion_lambda_omega(p, xi + two_pi * j);
      for (cplx target : {l1, l2}) {
        double best = inf;
        for (int m = 0; m < ev.size(); ++m) best = std::min(best, std::abs(ev(m) - target));
        worst = std::max(worst, best);
      }
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Spectrum, CriticalBranchMatchesOracle) {
  const SpectralScan& s = scan64();
  const LambdaOmegaParams& p = spectral_params();
  for (int r = 0; r < 64; ++r) {
    const cplx oracle = exact_dispersion_lambda_omega(p, s.xi(r)).first / p.k();
    EXPECT_LE(std::abs(s.branches[r].lambda - oracle), 1e-6) << s.xi(r);
  }
}

TEST(Spectrum, DriftAndDiffusionFromSymbol) {
  const SpectralSummary& s = scan64().summary;
  const LambdaOmegaParams& p = spectral_params();
  // Fine centered differences of the closed-form critical branch.
  const double h = 1e-3;
  auto lam = [&](double xi) { return exact_dispersion_lambda_omega(p, xi).first / p.k(); };
  const cplx d1 = (lam(h) - lam(-h)) / (2 * h);
  const cplx d2 = (lam(h) - 2.0 * lam(0.0) + lam(-h)) / (h * h);
  EXPECT_NEAR(s.a, d1.imag(), 1e-6);
  EXPECT_NEAR(s.d, -0.5 * d2.real(), 1e-6);
  EXPECT_NEAR(s.a, 2.6, 1e-6);
  EXPECT_NEAR(s.d, 0.0285153, 1e-6);
  EXPECT_LE(s.a_imag_residual, 1e-8);
  EXPECT_LE(s.d_imag_residual, 1e-8);
}

TEST(Spectrum, CertificateAndZeroMode) {
  const SpectralScan& s = scan64();
  EXPECT_LE(s.summary.lambda0, 1e-8);
  EXPECT_GT(s.summary.simplicity_margin, 0.1);
  EXPECT_GT(s.summary.theta, 0.0);
  EXPECT_GT(s.summary.d, 0.0);
  EXPECT_GT(s.summary.spectral_gap, 0.0);
  EXPECT_GE(s.summary.min_branch_overlap, 0.9);
  for (int r = 0; r < 64; ++r)
    for (int m = 0; m < s.spectra[r].size(); ++m)
      EXPECT_LE(s.spectra[r](m).real() + s.summary.theta * s.xi(r) * s.xi(r), 1e-10);
}

TEST(Spectrum, ComplexSymmetry) {
  const SpectralScan& s = scan64();
  for (int r = 1; r < 64; ++r)
    EXPECT_LE(std::abs(s.branches[r].lambda - std::conj(s.branches[64 - r].lambda)), 1e-8) << r;
}

TEST(Spectrum, EigenpairResiduals) {
  const SpectralScan& s = scan64();
  const WaveProfile& w = spectral_profile();
  for (int r = 0; r < 64; r += 7) {
    const BlochBranch& b = s.branches[r];
    const Eigen::MatrixXcd G = assemble_L_xi(w, b.xi).generator();
    EXPECT_LE((G * b.phi - b.lambda * b.phi).norm() / b.phi.norm(), 1e-8);
    EXPECT_LE((G.adjoint() * b.phi_tilde - std::conj(b.lambda) * b.phi_tilde).norm() / b.phi_tilde.norm(), 1e-8);
    EXPECT_LE(std::abs(inner(b.phi_tilde, b.phi) - 1.0), 1e-10);
  }
  const CVec phi0 = mode_coefficients(w.deriv);
  EXPECT_LE((s.branches[32].phi - phi0).norm() / phi0.norm(), 1e-10);
}

TEST(Spectrum, TruncationRobustness) {
  const SpectralSummary& base = scan64().summary;
  const SpectralSummary fineM = spectrum_scan(solve_lambda_omega(spectral_params(), 64), 64).summary;
  const SpectralSummary fineXi = spectrum_scan(spectral_profile(), 128).summary;
  EXPECT_NEAR(fineM.a, base.a, 1e-6);
  EXPECT_NEAR(fineM.d, base.d, 1e-6);
  EXPECT_NEAR(fineXi.a, base.a, 1e-6);
  EXPECT_NEAR(fineXi.d, base.d, 1e-6);
}

TEST(Spectrum, CubicRemainder) {
  const SpectralScan s = spectrum_scan(spectral_profile(), 256);
  const double a = s.summary.a, d = s.summary.d;
  double C = 0.0;
  std::vector<double> scaled;
  for (int r = 0; r < 256; ++r) {
    const double xi = s.xi(r);
    if (xi == 0.0 || std::abs(xi) > s.summary.xi0) continue;
    const double rem = std::abs(s.branches[r].lambda - cplx(-d * xi * xi, a * xi));
    C = std::max(C, rem / std::pow(std::abs(xi), 3));
  }
  EXPECT_TRUE(std::isfinite(C));
  // Cubic scaling: halving xi cuts the remainder by about 8.
  auto rem_at = [&](int off) {
    const double xi = s.xi(128 + off);
    return std::abs(s.branches[128 + off].lambda - cplx(-d * xi * xi, a * xi));
  };
  const double ratio = rem_at(8) / rem_at(4);
  EXPECT_GT(ratio, 6.0);
  EXPECT_LT(ratio, 10.0);
}

TEST(Spectrum, UnstableWaveTrainIsRejected) {
  const LambdaOmegaParams p{0.5, 0.8};
  EXPECT_THROW(spectrum_scan(solve_lambda_omega(p, 32), 64), StabilityViolation);
}

TEST(Spectrum, XiCountPrecondition) {
  EXPECT_THROW(spectrum_scan(spectral_profile(), 32), InvalidParameter);
}

TEST(Projections, RankOneAlgebra) {
  const SpectralScan& s = scan64();
  const WaveProfile& w = spectral_profile();
  const CVec up = mode_coefficients(w.deriv);
  double C = 0.0;
  for (int r = 0; r < 64; ++r) {
    if (std::abs(s.xi(r)) > 2.0 * s.summary.xi0) continue;
    const Projection P = projections(s.branches[r]);
    const Eigen::MatrixXcd Pp = P.matrix_p();
    EXPECT_LE((Pp * Pp - Pp).norm(), 1e-10);
    EXPECT_LE((P.apply_p(s.branches[r].phi) - s.branches[r].phi).norm(), 1e-10 * s.branches[r].phi.norm());
    EXPECT_LE(P.apply_tilde(s.branches[r].phi).norm(), 1e-10 * s.branches[r].phi.norm());
    if (std::abs(s.xi(r)) <= s.summary.xi0 && s.xi(r) != 0.0)
      C = std::max(C, P.apply_tilde(up).norm() / std::abs(s.xi(r)));
  }
  // Pi~(xi) u' = O(xi): at the smallest node the ratio is representative.
  const Projection P1 = projections(s.branches[33]);
  EXPECT_LE(P1.apply_tilde(up).norm(), 1.01 * C * std::abs(s.xi(33)));
  EXPECT_LE(projections(s.branches[32]).apply_tilde(up).norm(), 1e-10 * up.norm());
  EXPECT_LT(C, 10.0 * up.norm());
}
