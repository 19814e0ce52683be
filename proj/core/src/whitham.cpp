#include "modwave/whitham.hpp"

#include "modwave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace modwave {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const int n = static_cast<int>(x_.size());
  if (n < 2 || y_.size() != x_.size()) throw InvalidParameter("spline needs at least two matching nodes");
  for (int i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw InvalidParameter("spline nodes must increase");
  m_.assign(n, 0.0);
  step_ = (x_.back() - x_.front()) / (n - 1);
  uniform_ = true;
  for (int i = 1; i < n; ++i)
    if (std::abs(x_[i] - x_[i - 1] - step_) > 1e-9 * step_) uniform_ = false;
  if (n == 2) return;
  // Tridiagonal solve for interior second derivatives.
  std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), r(n, 0.0);
  for (int i = 1; i < n - 1; ++i) {
    const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
    a[i] = h0 / 6.0;
    b[i] = (h0 + h1) / 3.0;
    c[i] = h1 / 6.0;
    r[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
  }
  for (int i = 2; i < n - 1; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    r[i] -= w * r[i - 1];
  }
  for (int i = n - 2; i >= 1; --i) m_[i] = (r[i] - (i + 1 < n - 1 ? c[i] * m_[i + 1] : 0.0)) / b[i];
}

int CubicSpline::segment(double x) const {
  if (uniform_) {
    const int i = static_cast<int>(std::floor((x - x_.front()) / step_));
    return std::clamp(i, 0, static_cast<int>(x_.size()) - 2);
  }
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  int i = static_cast<int>(it - x_.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(x_.size()) - 2);
}

double CubicSpline::operator()(double x) const {
  const int i = segment(x);
  const double h = x_[i + 1] - x_[i], A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
  return A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
  const int i = segment(x);
  const double h = x_[i + 1] - x_[i], A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h - (3.0 * A * A - 1.0) / 6.0 * h * m_[i] + (3.0 * B * B - 1.0) / 6.0 * h * m_[i + 1];
}

double CubicSpline::second_derivative(double x) const {
  const int i = segment(x);
  const double h = x_[i + 1] - x_[i], A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
  return A * m_[i] + B * m_[i + 1];
}

WhithamCoefficients extract_coefficients(const ProfileFamily& family, const std::vector<SpectralSummary>& summaries) {
  const size_t n = family.k_grid.size();
  if (n < 3) throw InvalidParameter("family needs at least three members");
  if (summaries.size() != n) throw SizeMismatch("one spectral summary per family member is required");
  WhithamCoefficients w;
  w.k_star = family.k_grid[family.base_index];
  w.c_star = family.c_of_k[family.base_index];
  for (size_t i = 0; i < n; ++i) {
    const SpectralSummary& s = summaries[i];
    if (!(s.theta > 0.0) || !(s.d > 0.0)) {
      std::ostringstream msg;
      msg << "family member k = " << family.k_grid[i] << " is not diffusively stable (theta = " << s.theta
          << ", d = " << s.d << ")";
      throw UnstableFamilyMember(msg.str());
    }
    w.k.push_back(family.k_grid[i]);
    w.omega.push_back(family.omega_of_k[i]);
    w.d.push_back(s.d);
  }
  w.omega_spline = CubicSpline(w.k, w.omega);
  w.d_spline = CubicSpline(w.k, w.d);
  return w;
}

WhithamCoefficients extract_coefficients(const ProfileFamily& family, int xi_count, int jobs) {
  const int n = static_cast<int>(family.profiles.size());
  std::vector<SpectralSummary> summaries(n);
  std::vector<std::string> failures(n);
  parallel_for(n, jobs, [&](int i) {
    try {
      ScanOptions opt;
      opt.jobs = 1;
      summaries[i] = spectrum_scan(family.profiles[i], xi_count, opt).summary;
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  for (int i = 0; i < n; ++i)
    if (!failures[i].empty()) {
      std::ostringstream msg;
      msg << "family member k = " << family.k_grid[i] << ": " << failures[i];
      throw UnstableFamilyMember(msg.str());
    }
  return extract_coefficients(family, summaries);
}

double whitham_stable_dt(const WhithamCoefficients& coeffs, double dy) {
  double dmax = 0.0, amax = 0.0;
  for (size_t i = 0; i < coeffs.k.size(); ++i) {
    dmax = std::max(dmax, coeffs.k_star * coeffs.d[i] / coeffs.k[i]);
    amax = std::max(amax, std::abs(coeffs.c_star + coeffs.omega_prime(coeffs.k[i])));
  }
  double dt = 0.4 * dy * dy / std::max(dmax, 1e-300);
  if (amax > 0.0) dt = std::min(dt, 0.5 * dy / amax);
  return dt;
}

namespace {

void whitham_rhs(const WhithamCoefficients& w, const Vec& K, double dy, bool frozen, Vec& out) {
  const int n = static_cast<int>(K.size());
  Vec G(n), flux(n);  // flux(i) at interface i + 1/2
  const double d_star = w.d_at(w.k_star);
  for (int i = 0; i < n; ++i) G(i) = w.c_star * K(i) + w.omega_at(K(i));
  for (int i = 0; i < n; ++i) {
    const int r = (i + 1) % n;
    const double kb = 0.5 * (K(i) + K(r));
    const double diff = w.k_star * (frozen ? d_star : w.d_at(kb)) / kb;
    flux(i) = 0.5 * (G(i) + G(r)) + diff * (K(r) - K(i)) / dy;
  }
  out.resize(n);
  for (int i = 0; i < n; ++i) out(i) = (flux(i) - flux((i - 1 + n) % n)) / dy;
}

void check_band(const WhithamCoefficients& w, const Vec& K, double t) {
  const double lo = K.minCoeff(), hi = K.maxCoeff();
  if (lo < w.k_min() || hi > w.k_max()) {
    std::ostringstream msg;
    msg << "wavenumber range [" << lo << ", " << hi << "] leaves the tabulated band [" << w.k_min() << ", "
        << w.k_max() << "] at t = " << t;
    throw BandEscape(msg.str());
  }
}

}  // namespace

std::vector<WhithamState> solve_whitham(const WhithamCoefficients& coeffs, const Vec& k0, double length, double t_end,
                                        const WhithamOptions& options) {
  const int n = static_cast<int>(k0.size());
  if (n < 4) throw InvalidParameter("slow grid needs at least four cells");
  if (!(length > 0.0) || !(t_end >= 0.0)) throw InvalidParameter("length and t_end must be positive");
  const double dy = length / n;
  const double limit = whitham_stable_dt(coeffs, dy);
  if (options.dt > limit) throw InvalidParameter("requested step exceeds the explicit stability limit");
  const double dt_max = options.dt > 0.0 ? options.dt : limit;

  std::vector<double> outputs = options.output_times;
  if (outputs.empty()) outputs.push_back(t_end);
  std::sort(outputs.begin(), outputs.end());

  std::vector<WhithamState> out;
  Vec K = k0;
  check_band(coeffs, K, 0.0);
  out.push_back({0.0, K});
  double t = 0.0;
  Vec k1, k2, r;
  for (double target : outputs) {
    if (target > t_end + 1e-12) break;
    const int steps = static_cast<int>(std::ceil((target - t) / dt_max - 1e-12));
    if (steps > 0) {
      const double h = (target - t) / steps;
      for (int s = 0; s < steps; ++s) {
        // Strong-stability-preserving RK3.
        whitham_rhs(coeffs, K, dy, options.frozen_d, r);
        k1 = K + h * r;
        whitham_rhs(coeffs, k1, dy, options.frozen_d, r);
        k2 = 0.75 * K + 0.25 * (k1 + h * r);
        whitham_rhs(coeffs, k2, dy, options.frozen_d, r);
        K = K / 3.0 + 2.0 / 3.0 * (k2 + h * r);
        check_band(coeffs, K, t + (s + 1) * h);
      }
    }
    t = target;
    out.push_back({t, K});
  }
  return out;
}

Vec wavenumber_field(const Vec& psi_x, double k_star, int points) {
  const Field res = resample_periodic(Field(psi_x), points);
  return (k_star * (1.0 + res.col(0).array())).matrix();
}

WhithamComparison compare_with_pde(const std::vector<WhithamState>& whitham, const std::vector<FieldState>& pde,
                                   double k_star, double length) {
  WhithamComparison cmp;
  for (const auto& s : pde) {
    const auto it = std::find_if(whitham.begin(), whitham.end(),
                                 [&](const WhithamState& w) { return std::abs(w.t - s.t) <= 1e-6 * (1.0 + s.t); });
    if (it == whitham.end()) continue;
    const int n = static_cast<int>(it->k_field.size());
    const double dy = length / n;
    const Vec kp = wavenumber_field(s.psi_x, k_star, n);
    const Vec diff = it->k_field - kp;
    const Vec dev = (kp.array() - k_star).matrix();
    cmp.t.push_back(s.t);
    const double l2 = std::sqrt(dy * diff.squaredNorm());
    const double ref = std::sqrt(dy * dev.squaredNorm());
    cmp.l2_error.push_back(l2);
    cmp.linf_error.push_back(diff.cwiseAbs().maxCoeff());
    cmp.relative_l2.push_back(ref > 0.0 ? l2 / ref : (l2 > 0.0 ? inf : 0.0));
    cmp.whitham_linf.push_back((it->k_field.array() - k_star).abs().maxCoeff());
    cmp.pde_linf.push_back(dev.cwiseAbs().maxCoeff());
  }
  return cmp;
}

}  // namespace modwave
