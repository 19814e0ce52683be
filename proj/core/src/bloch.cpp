#include "modwave/bloch.hpp"

#include "modwave/fft.hpp"
#include "modwave/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace modwave {

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

BlochField zero_bloch_field(const Grid& grid, int components) {
  BlochField b;
  b.periods = grid.periods;
  b.points = grid.points;
  b.components = components;
  b.xi.resize(grid.periods);
  for (int r = 0; r < grid.periods; ++r) b.xi(r) = -pi + two_pi * r / grid.periods;
  b.coeffs = CField::Zero(components * grid.points, grid.periods);
  return b;
}

BlochField bloch_forward(const CField& g, const Grid& grid) {
  grid.validate();
  if (!is_power_of_two(grid.periods)) throw SizeMismatch("Bloch transform needs a power-of-two period count");
  if (g.rows() != grid.size()) throw SizeMismatch("grid function length != M*N");
  const int N = grid.periods, M = grid.points, L = grid.size();
  const int n = static_cast<int>(g.cols());
  BlochField b = zero_bloch_field(grid, n);
  const double scale = 1.0 / (two_pi * M);
  CVec buf(L);
  for (int c = 0; c < n; ++c) {
    buf = g.col(c);
    fft_inplace(buf.data(), L, false);
    for (int r = 0; r < N; ++r) {
      const int rr = r - N / 2;
      for (int j = -M / 2; j < M / 2; ++j) {
        int m = (rr + N * j) % L;
        if (m < 0) m += L;
        b.coeffs(b.index(c, j), r) = buf(m) * scale;
      }
    }
  }
  return b;
}

BlochField bloch_forward(const Field& g, const Grid& grid) { return bloch_forward(CField(g.cast<cplx>()), grid); }

CField bloch_inverse_complex(const BlochField& b) {
  const int N = b.periods, M = b.points, L = N * M;
  CField out(L, b.components);
  CVec buf(L);
  for (int c = 0; c < b.components; ++c) {
    for (int r = 0; r < N; ++r) {
      const int rr = r - N / 2;
      for (int j = -M / 2; j < M / 2; ++j) {
        int m = (rr + N * j) % L;
        if (m < 0) m += L;
        buf(m) = b.coeffs(b.index(c, j), r) * (two_pi * M);
      }
    }
    fft_inplace(buf.data(), L, true);
    out.col(c) = buf / static_cast<double>(L);
  }
  return out;
}

Field bloch_inverse(const BlochField& b) { return bloch_inverse_complex(b).real(); }

CField bloch_column_samples(const BlochField& b, int r) {
  return mode_synthesis(CVec(b.coeffs.col(r)), b.components, b.points);
}

BlochOperatorMatrix assemble_L_xi(const WaveProfile& p, double xi) {
  const int M = p.M, n = p.n;
  BlochOperatorMatrix op;
  op.xi = xi;
  op.k = p.k_star;
  op.scaled = Eigen::MatrixXcd::Zero(n * M, n * M);
  const cplx i(0.0, 1.0);
  // Convolution by the Fourier coefficients of b_ab (circulant on M modes,
  // matching collocation).
  for (int a = 0; a < n; ++a)
    for (int s = 0; s < n; ++s) {
      Field col = p.b_coeff.col(a * n + s);
      const CVec bh = mode_coefficients(col);
      for (int j1 = -M / 2; j1 < M / 2; ++j1)
        for (int j2 = -M / 2; j2 < M / 2; ++j2) {
          int d = j1 - j2;
          d = ((d + M / 2) % M + M) % M - M / 2;
          op.scaled(a * M + j1 + M / 2, s * M + j2 + M / 2) = bh(d + M / 2);
        }
    }
  for (int a = 0; a < n; ++a)
    for (int j = -M / 2; j < M / 2; ++j) {
      const double eta = two_pi * j + xi;
      op.scaled(a * M + j + M / 2, a * M + j + M / 2) += -p.k_star * p.k_star * eta * eta + i * p.k_star * p.c * eta;
    }
  return op;
}

cplx inner(const CVec& f, const CVec& g) { return f.dot(g); }

Eigen::MatrixXcd Projection::matrix_tilde() const {
  return Eigen::MatrixXcd::Identity(phi.size(), phi.size()) - matrix_p();
}

Projection projections(const BlochBranch& branch) { return {branch.phi, branch.phi_tilde}; }

namespace {

struct RawEigen {
  CVec lambda;
  Eigen::MatrixXcd V;
};

double overlap(const CVec& a, const CVec& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

int best_match(const Eigen::MatrixXcd& V, const CVec& ref, double& score) {
  score = -1.0;
  int best = -1;
  for (int m = 0; m < V.cols(); ++m) {
    const double s = overlap(ref, CVec(V.col(m)));
    if (s > score) {
      score = s;
      best = m;
    }
  }
  return best;
}

}  // namespace

SpectralScan spectrum_scan(const WaveProfile& profile, int xi_count, const ScanOptions& options) {
  if (xi_count < 64) throw InvalidParameter("spectrum_scan needs xi_count >= 64");
  if (xi_count % 2 != 0) throw InvalidParameter("xi_count must be even so that xi = 0 is a node");
  const int M = profile.M, n = profile.n, dim = n * M;

  SpectralScan scan;
  scan.xi.resize(xi_count);
  for (int r = 0; r < xi_count; ++r) scan.xi(r) = -pi + two_pi * r / xi_count;
  scan.zero_index = xi_count / 2;
  const int r0 = scan.zero_index;

  std::vector<RawEigen> raw(xi_count);
  std::vector<double> recon(xi_count, 0.0);
  parallel_for(xi_count, options.jobs, [&](int r) {
    const Eigen::MatrixXcd G = assemble_L_xi(profile, scan.xi(r)).generator();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(G, true);
    if (es.info() != Eigen::Success) throw NoConvergence("eigenvalue solver failed");
    raw[r].lambda = es.eigenvalues();
    raw[r].V = es.eigenvectors();
  });

  // Track the critical branch from u' at xi = 0 outward in both directions.
  const CVec phi0 = mode_coefficients(profile.deriv);
  std::vector<int> crit(xi_count, -1);
  std::vector<double> ovl(xi_count, 1.0);
  double score = 0.0;
  crit[r0] = best_match(raw[r0].V, phi0, score);
  ovl[r0] = score;
  for (int dir : {+1, -1}) {
    for (int r = r0 + dir; r >= 0 && r < xi_count; r += dir) {
      const CVec prev = raw[r - dir].V.col(crit[r - dir]);
      crit[r] = best_match(raw[r].V, prev, score);
      ovl[r] = score;
    }
  }

  scan.branches.resize(xi_count);
  scan.spectra.resize(xi_count);
  if (options.keep_eigendata) scan.eigen.resize(xi_count);
  parallel_for(xi_count, options.jobs, [&](int r) {
    const auto& e = raw[r];
    const int c = crit[r];
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(e.V);
    const CVec vc = e.V.col(c);
    // Fixed gauge <phi(0), phi(xi)> = |phi(0)|^2; fall back to unit overlap
    // phase when the projection is too weak.
    cplx gauge;
    const cplx proj = phi0.dot(vc);
    if (std::abs(proj) > 0.1 * phi0.norm() * vc.norm()) {
      gauge = phi0.squaredNorm() / proj;
    } else {
      gauge = phi0.norm() / vc.norm();
    }
    const Eigen::MatrixXcd Vinv = lu.inverse();
    BlochBranch& br = scan.branches[r];
    br.xi = scan.xi(r);
    br.lambda = e.lambda(c);
    br.phi = vc * gauge;
    const Eigen::RowVectorXcd left = Vinv.row(c);
    // <phi_tilde, g> = sum conj(phi_tilde) g = (left * g) / gauge
    br.phi_tilde = (left / gauge).adjoint();
    br.overlap = ovl[r];
    scan.spectra[r] = e.lambda;
    if (options.keep_eigendata) {
      FloquetEigen& fe = scan.eigen[r];
      fe.lambda = e.lambda;
      fe.V = e.V;
      fe.Vinv = Vinv;
      fe.critical = c;
      fe.gauge = gauge;
      const Eigen::MatrixXcd G = assemble_L_xi(profile, scan.xi(r)).generator();
      fe.reconstruction_error = (fe.V * fe.lambda.asDiagonal() * fe.Vinv - G).norm() / G.norm();
      recon[r] = fe.reconstruction_error;
    }
  });

  SpectralSummary& s = scan.summary;
  s.xi_count = xi_count;
  s.M = M;
  s.min_branch_overlap = *std::min_element(ovl.begin(), ovl.end());
  s.max_reconstruction_error = *std::max_element(recon.begin(), recon.end());
  s.lambda0 = std::abs(scan.branches[r0].lambda);

  // (D1): simple zero eigenvalue at xi = 0, every other eigenvalue strictly stable.
  s.simplicity_margin = inf;
  double worst_re0 = -inf;
  for (int m = 0; m < dim; ++m) {
    if (m == crit[r0]) continue;
    s.simplicity_margin = std::min(s.simplicity_margin, std::abs(raw[r0].lambda(m)));
    worst_re0 = std::max(worst_re0, raw[r0].lambda(m).real());
  }
  if (s.simplicity_margin < 1e-6) {
    std::ostringstream msg;
    msg << "second eigenvalue of L_0 within " << s.simplicity_margin << " of zero";
    throw SimplicityViolation(msg.str());
  }
  if (worst_re0 >= 0.0) {
    std::ostringstream msg;
    msg << "non-critical eigenvalue of L_0 with Re = " << worst_re0;
    throw StabilityViolation(msg.str());
  }

  // (D2): Re lambda <= -theta xi^2 over the whole computed spectrum.
  s.theta = inf;
  for (int r = 0; r < xi_count; ++r) {
    if (r == r0) continue;
    const double xi2 = scan.xi(r) * scan.xi(r);
    for (int m = 0; m < dim; ++m) {
      const double re = raw[r].lambda(m).real();
      if (re > 0.0) {
        std::ostringstream msg;
        msg << "eigenvalue with Re = " << re << " at xi = " << scan.xi(r);
        throw StabilityViolation(msg.str());
      }
      s.theta = std::min(s.theta, -re / xi2);
    }
  }
  if (!(s.theta > 0.0)) throw StabilityViolation("theta is not positive");

  // Expansion coefficients by 4th-order centered differences.
  const double h = two_pi / xi_count;
  auto lam = [&](int off) { return scan.branches[r0 + off].lambda; };
  const cplx d1 = (-lam(2) + 8.0 * lam(1) - 8.0 * lam(-1) + lam(-2)) / (12.0 * h);
  const cplx d2 = (-lam(2) + 16.0 * lam(1) - 30.0 * lam(0) + 16.0 * lam(-1) - lam(-2)) / (12.0 * h * h);
  s.a = d1.imag();
  s.d = -0.5 * d2.real();
  s.a_imag_residual = std::abs(d1.real());
  s.d_imag_residual = 0.5 * std::abs(d2.imag());

  // Gap between the critical eigenvalue and the rest, and the cutoff radius.
  std::vector<double> gap(xi_count, inf);
  for (int r = 0; r < xi_count; ++r)
    for (int m = 0; m < dim; ++m)
      if (m != crit[r]) gap[r] = std::min(gap[r], std::abs(raw[r].lambda(m) - raw[r].lambda(crit[r])));
  s.gap_at_zero = gap[r0];
  double xi0 = 0.0;
  for (int off = 1; r0 + off < xi_count && r0 - off >= 0; ++off) {
    if (gap[r0 + off] < 0.5 * s.gap_at_zero || gap[r0 - off] < 0.5 * s.gap_at_zero) break;
    xi0 = off * h;
  }
  s.xi0 = std::min(xi0, options.xi0_cap);
  s.spectral_gap = inf;
  for (int r = 0; r < xi_count; ++r)
    if (std::abs(scan.xi(r)) <= 2.0 * s.xi0 + 1e-12) s.spectral_gap = std::min(s.spectral_gap, gap[r]);
  return scan;
}

}  // namespace modwave
