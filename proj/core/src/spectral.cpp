#include "modwave/spectral.hpp"

#include "modwave/fft.hpp"

#include <algorithm>
#include <cmath>

namespace modwave {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void Grid::validate() const {
  if (periods < 1) throw InvalidParameter("grid needs at least one period");
  if (points < 4 || points % 2 != 0) throw InvalidParameter("points per period must be even and >= 4");
}

Vec wavenumbers(int n, double length) {
  Vec k(n);
  for (int m = 0; m < n; ++m) {
    const int mm = (m <= n / 2) ? m : m - n;
    k(m) = two_pi * mm / length;
  }
  if (n % 2 == 0) k(n / 2) = -k(n / 2);  // Nyquist carried as -n/2
  return k;
}

namespace {

// Multiplier (i k)^order on the half spectrum of a real signal.
CVec derivative_symbol(int n, double length, int order) {
  CVec s(n / 2 + 1);
  for (int m = 0; m <= n / 2; ++m) {
    const double k = two_pi * m / length;
    s(m) = std::pow(cplx(0.0, k), order);
  }
  if (n % 2 == 0 && order % 2 == 1) s(n / 2) = 0.0;
  return s;
}

}  // namespace

Vec derivative(const Vec& f, double length, int order) {
  if (order == 0) return f;
  const int n = static_cast<int>(f.size());
  CVec spec = rfft(f);
  spec.array() *= derivative_symbol(n, length, order).array();
  return irfft(spec, n);
}

Field derivative(const Field& f, double length, int order) {
  Field out(f.rows(), f.cols());
  for (int c = 0; c < f.cols(); ++c) out.col(c) = derivative(Vec(f.col(c)), length, order);
  return out;
}

Field translate(const Field& f, double length, double shift) {
  const int n = static_cast<int>(f.rows());
  Field out(f.rows(), f.cols());
  CVec phase(n / 2 + 1);
  for (int m = 0; m <= n / 2; ++m) phase(m) = std::polar(1.0, two_pi * m * shift / length);
  if (n % 2 == 0) phase(n / 2) = std::cos(pi * n * shift / length);
  for (int c = 0; c < f.cols(); ++c) {
    CVec spec = rfft(Vec(f.col(c)));
    spec.array() *= phase.array();
    out.col(c) = irfft(spec, n);
  }
  return out;
}

Vec pointwise_norm(const Field& f) { return f.rowwise().norm(); }

double lp_norm(const Vec& f, double h, double p) {
  if (std::isinf(p)) return f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (p == 1.0) return f.cwiseAbs().sum() * h;
  if (p == 2.0) return std::sqrt(f.squaredNorm() * h);
  return std::pow(f.cwiseAbs().array().pow(p).sum() * h, 1.0 / p);
}

double lp_norm(const Field& f, double h, double p) {
  if (f.cols() == 1) return lp_norm(Vec(f.col(0)), h, p);
  return lp_norm(pointwise_norm(f), h, p);
}

double hk_norm(const Vec& f, double length, int K) {
  const int n = static_cast<int>(f.size());
  const CVec spec = rfft(f);
  // Parseval on the half spectrum: interior modes count twice.
  double total = 0.0;
  for (int m = 0; m <= n / 2; ++m) {
    const double k2 = std::pow(two_pi * m / length, 2);
    double weight = 0.0, kp = 1.0;
    for (int j = 0; j <= K; ++j, kp *= k2) weight += kp;
    const double mult = (m == 0 || (n % 2 == 0 && m == n / 2)) ? 1.0 : 2.0;
    total += mult * weight * std::norm(spec(m));
  }
  return std::sqrt(total * length / (static_cast<double>(n) * n));
}

double hk_norm(const Field& f, double length, int K) {
  double total = 0.0;
  for (int c = 0; c < f.cols(); ++c) total += std::pow(hk_norm(Vec(f.col(c)), length, K), 2);
  return std::sqrt(total);
}

double l1_hk_norm(const Vec& f, double length, int K) {
  return lp_norm(f, length / f.size(), 1.0) + hk_norm(f, length, K);
}

double l1_hk_norm(const Field& f, double length, int K) {
  return lp_norm(f, length / f.rows(), 1.0) + hk_norm(f, length, K);
}

double boundary_ratio(const Vec& f, const Grid& grid, double floor) {
  const double peak = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (peak == 0.0) return 0.0;
  const int M = grid.points;
  const int n = static_cast<int>(f.size());
  double edge = 0.0;
  for (int i = 0; i < M; ++i) edge = std::max({edge, std::abs(f(i)), std::abs(f(n - 1 - i))});
  return edge <= floor ? 0.0 : edge / peak;
}

double boundary_ratio(const Field& f, const Grid& grid, double floor) {
  return boundary_ratio(pointwise_norm(f), grid, floor);
}

Field resample_periodic(const Field& f, int points) {
  const int n = static_cast<int>(f.rows());
  if (n == points) return f;
  Field out(points, f.cols());
  const int keep = std::min(n, points) / 2;  // modes |m| < keep are copied
  for (int c = 0; c < f.cols(); ++c) {
    const CVec spec = rfft(Vec(f.col(c)));
    CVec dst = CVec::Zero(points / 2 + 1);
    for (int m = 0; m < keep; ++m) dst(m) = spec(m) * (static_cast<double>(points) / n);
    out.col(c) = irfft(dst, points);
  }
  return out;
}

PeriodicInterpolator::PeriodicInterpolator(int stencil) : stencil_(stencil), bary_(stencil) {
  // Barycentric weights for equispaced nodes: (-1)^j binom(s-1, j).
  double w = 1.0;
  for (int j = 0; j < stencil; ++j) {
    bary_(j) = (j % 2 == 0 ? 1.0 : -1.0) * w;
    w = w * (stencil - 1 - j) / (j + 1);
  }
}

double PeriodicInterpolator::operator()(const double* data, int n, double pos) const {
  const double fl = std::floor(pos);
  const double frac = pos - fl;
  const int base = static_cast<int>(fl) - stencil_ / 2 + 1;
  if (frac == 0.0) {
    int i = static_cast<int>(fl) % n;
    return data[i < 0 ? i + n : i];
  }
  double num = 0.0, den = 0.0;
  for (int j = 0; j < stencil_; ++j) {
    const double d = frac - (j - stencil_ / 2 + 1);
    int idx = (base + j) % n;
    if (idx < 0) idx += n;
    if (d == 0.0) return data[idx];  // frac rounded up to exactly 1
    const double t = bary_(j) / d;
    num += t * data[idx];
    den += t;
  }
  return num / den;
}

}  // namespace modwave

namespace modwave {

CVec mode_coefficients(const CField& periodic) {
  const int M = static_cast<int>(periodic.rows());
  const int n = static_cast<int>(periodic.cols());
  CVec out(n * M);
  for (int c = 0; c < n; ++c) {
    const CVec spec = fft(CVec(periodic.col(c)));
    for (int j = -M / 2; j < M / 2; ++j) out(c * M + j + M / 2) = spec((j + M) % M) / static_cast<double>(M);
  }
  return out;
}

CVec mode_coefficients(const Field& periodic) { return mode_coefficients(CField(periodic.cast<cplx>())); }

CField mode_synthesis(const CVec& coeffs, int components, int M) {
  if (coeffs.size() != components * M) throw SizeMismatch("mode_synthesis: coefficient count != n*M");
  CField out(M, components);
  for (int c = 0; c < components; ++c) {
    CVec spec(M);
    for (int j = -M / 2; j < M / 2; ++j) spec((j + M) % M) = coeffs(c * M + j + M / 2);
    out.col(c) = ifft(spec) * static_cast<double>(M);
  }
  return out;
}

}  // namespace modwave
