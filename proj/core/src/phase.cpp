#include "modwave/dynamics.hpp"

#include "modwave/fft.hpp"
#include "modwave/spectral.hpp"

#include <cmath>
#include <sstream>

namespace modwave {

namespace {

struct Harmonics {
  std::vector<int> modes;                // active j >= 1
  std::vector<std::vector<cplx>> coeff;  // coeff[c][idx] = profile mode j of component c
};

Harmonics active_harmonics(const WaveProfile& profile) {
  const int M = profile.M, n = profile.n;
  const CVec all = mode_coefficients(profile.values);
  const double peak = all.cwiseAbs().maxCoeff();
  Harmonics h;
  h.coeff.assign(n, {});
  for (int j = 1; j < M / 2; ++j) {
    double mag = 0.0;
    for (int c = 0; c < n; ++c) mag = std::max(mag, std::abs(all(c * M + j + M / 2)));
    if (mag <= 1e-12 * peak) continue;
    h.modes.push_back(j);
    for (int c = 0; c < n; ++c) h.coeff[c].push_back(all(c * M + j + M / 2));
  }
  return h;
}

double nearest_branch(double sigma, double target) { return sigma + std::round(target - sigma); }

}  // namespace

Vec windowed_correlation_phase(const Field& u_tilde, const WaveProfile& profile, const Grid& grid, const Vec* guess) {
  const int L = grid.size(), M = grid.points, n = profile.n;
  if (u_tilde.rows() != L || u_tilde.cols() != n) throw SizeMismatch("u~ shape does not match the grid");
  if (M != profile.M) throw SizeMismatch("grid resolution != profile M");
  const Harmonics H = active_harmonics(profile);
  if (H.modes.empty() || H.modes.front() != 1) throw PhaseSlip("profile has no first harmonic");
  const int J = static_cast<int>(H.modes.size());

  // W[c][idx] is the one-period DFT of u~ over the window centred at x_i,
  // updated by sliding and refreshed exactly once per period.
  std::vector<std::vector<cplx>> W(n, std::vector<cplx>(J));
  std::vector<cplx> twiddle(static_cast<size_t>(J) * M);
  for (int idx = 0; idx < J; ++idx)
    for (int m = 0; m < M; ++m) twiddle[idx * M + m] = std::polar(1.0, -two_pi * H.modes[idx] * m / M);
  auto wrap = [L](int i) { return ((i % L) + L) % L; };
  auto refresh = [&](int i) {
    for (int c = 0; c < n; ++c)
      for (int idx = 0; idx < J; ++idx) {
        cplx acc = 0.0;
        for (int m = 0; m < M; ++m) {
          const int s = i - M / 2 + m;
          acc += u_tilde(wrap(s), c) * twiddle[idx * M + (((s % M) + M) % M)];
        }
        W[c][idx] = acc / static_cast<double>(M);
      }
  };

  Vec psi(L);
  double previous = guess ? (*guess)(0) : 0.0;
  for (int i = 0; i < L; ++i) {
    if (i % M == 0) {
      refresh(i);
    } else {
      const int out = i - 1 - M / 2, in = i - 1 + M / 2;
      for (int c = 0; c < n; ++c)
        for (int idx = 0; idx < J; ++idx)
          W[c][idx] += (u_tilde(wrap(in), c) * twiddle[idx * M + (((in % M) + M) % M)] -
                        u_tilde(wrap(out), c) * twiddle[idx * M + (((out % M) + M) % M)]) /
                       static_cast<double>(M);
    }
    std::vector<cplx> A(J, 0.0);
    for (int idx = 0; idx < J; ++idx)
      for (int c = 0; c < n; ++c) A[idx] += H.coeff[c][idx] * std::conj(W[c][idx]);

    const double target = guess ? (*guess)(i) : previous;
    double sigma = nearest_branch(-std::arg(A[0]) / two_pi, target);
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      double d1 = 0.0, d2 = 0.0;
      for (int idx = 0; idx < J; ++idx) {
        const double w = two_pi * H.modes[idx];
        const cplx e = A[idx] * std::polar(1.0, w * sigma);
        d1 += -2.0 * w * e.imag();
        d2 += -2.0 * w * w * e.real();
      }
      if (!(d2 < 0.0)) break;
      const double delta = -d1 / d2;
      sigma += delta;
      if (std::abs(delta) < 1e-15) {
        ok = true;
        break;
      }
      if (it == 49) ok = std::abs(delta) < 1e-10;
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "correlation maximizer not found at x = " << grid.x(i);
      throw PhaseSlip(msg.str());
    }
    if (std::abs(sigma - target) > 0.25) {
      std::ostringstream msg;
      msg << "phase jumps by " << sigma - target << " at x = " << grid.x(i);
      throw PhaseSlip(msg.str());
    }
    psi(i) = sigma;
    previous = sigma;
  }
  if (!guess && std::abs(psi(L - 1) - psi(0)) > 0.25)
    throw PhaseSlip("phase winds around the torus");
  return psi;
}

PhaseExtraction extract_phase(const Field& u_tilde, const WaveProfile& profile, const Grid& grid, const Vec* guess,
                              const ExtractionOptions& options) {
  const int L = grid.size(), M = grid.points, n = profile.n;
  if (u_tilde.rows() != L || u_tilde.cols() != n) throw SizeMismatch("u~ shape does not match the grid");
  if (M != profile.M) throw SizeMismatch("grid resolution != profile M");
  const double len = grid.length();

  PhaseExtraction out;
  out.psi = guess ? *guess : windowed_correlation_phase(u_tilde, profile, grid, nullptr);
  if (out.psi.size() != L) throw SizeMismatch("phase guess length != grid size");

  const Field ux = derivative(u_tilde, len, 1);
  const Field uxx = derivative(u_tilde, len, 2);
  const Field ubar = tile(profile.values, grid);
  const PeriodicInterpolator interp;

  // Per point, Newton on g(s) = (u~(x - s) - ubar(x)) . u~'(x - s).
  std::vector<Vec> cols(n), dcols(n), ddcols(n);
  for (int c = 0; c < n; ++c) cols[c] = u_tilde.col(c), dcols[c] = ux.col(c), ddcols[c] = uxx.col(c);
  int worst = 0;
  double last = 0.0;
  for (int i = 0; i < L; ++i) {
    const double start = out.psi(i);
    double s = start, step = 0.0;
    int it = 0;
    for (; it < options.max_iter; ++it) {
      const double pos = (grid.x(i) - s) * M;
      double g = 0.0, dg = 0.0;
      for (int c = 0; c < n; ++c) {
        const double u = interp(cols[c].data(), L, pos) - ubar(i, c);
        const double d1 = interp(dcols[c].data(), L, pos);
        const double d2 = interp(ddcols[c].data(), L, pos);
        g += u * d1;
        dg -= d1 * d1 + u * d2;
      }
      if (!(dg < 0.0)) {
        std::ostringstream msg;
        msg << "phase projection loses monotonicity at x = " << grid.x(i);
        throw PhaseSlip(msg.str());
      }
      step = -g / dg;
      s += step;
      if (std::abs(step) <= options.tol * std::max(1.0, len)) {
        ++it;
        break;
      }
    }
    if (std::abs(s - start) > 0.25) {
      std::ostringstream msg;
      msg << "phase moves by " << s - start << " at x = " << grid.x(i);
      throw PhaseSlip(msg.str());
    }
    out.psi(i) = s;
    worst = std::max(worst, it);
    last = std::max(last, std::abs(step));
  }
  out.iterations = worst;
  out.last_update = last;

  Field shifted(L, n);
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < L; ++i) shifted(i, c) = interp(cols[c].data(), L, (grid.x(i) - out.psi(i)) * M);
  out.v = shifted - ubar;
  out.psi_x = derivative(out.psi, len, 1);
  return out;
}

}  // namespace modwave
