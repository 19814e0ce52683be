#include "modwave/profile.hpp"

#include "modwave/spectral.hpp"

#include <cmath>
#include <sstream>

namespace modwave {

namespace {

Eigen::MatrixXd differentiation_matrix(int M, int order) {
  Eigen::MatrixXd D(M, M);
  for (int j = 0; j < M; ++j) {
    Vec e = Vec::Zero(M);
    e(j) = 1.0;
    D.col(j) = derivative(e, 1.0, order);
  }
  return D;
}

// Index of the first component whose first harmonic is comparable to the
// largest one; deterministic under translation and round-off.
int phase_component(const CVec& coeffs, int n, int M, double& magnitude) {
  magnitude = 0.0;
  for (int c = 0; c < n; ++c) magnitude = std::max(magnitude, std::abs(coeffs(c * M + M / 2 + 1)));
  for (int c = 0; c < n; ++c)
    if (std::abs(coeffs(c * M + M / 2 + 1)) >= 0.5 * magnitude) return c;
  return 0;
}

}  // namespace

Eigen::MatrixXd WaveProfile::b_at(int i) const {
  Eigen::MatrixXd b(n, n);
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s) b(r, s) = b_coeff(i, r * n + s);
  return b;
}

Field profile_residual(const ReactionSystem& system, double k, double c, const Field& values) {
  return k * k * derivative(values, 1.0, 2) + k * c * derivative(values, 1.0, 1) + system.eval(values);
}

void finalize_profile(const ReactionSystem& system, WaveProfile& p) {
  p.deriv = derivative(p.values, 1.0, 1);
  p.second = derivative(p.values, 1.0, 2);
  p.b_coeff.resize(p.M, p.n * p.n);
  Vec u(p.n);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> J(p.n, p.n);
  for (int i = 0; i < p.M; ++i) {
    u = p.values.row(i).transpose();
    system.jacobian(u.data(), J.data());
    for (int r = 0; r < p.n * p.n; ++r) p.b_coeff(i, r) = J.data()[r];
  }
  p.residual_norm = profile_residual(system, p.k_star, p.c, p.values).cwiseAbs().maxCoeff();
}

WaveProfile solve_profile(const ReactionSystem& system, double k, const Field& initial_guess, int M,
                          const ProfileOptions& options) {
  system.validate();
  const int n = system.n;
  if (M < 32 || M % 2 != 0) throw InvalidParameter("profile needs an even M >= 32");
  if (initial_guess.cols() != n) throw SizeMismatch("initial guess component count != system.n");
  if (!(k > 0.0) && !(k < 0.0)) throw InvalidParameter("wavenumber must be nonzero");

  Field u = resample_periodic(initial_guess, M);
  double mag = 0.0;
  const int pc = phase_component(mode_coefficients(u), n, M, mag);
  if (mag <= 1e-10 * std::max(1.0, u.cwiseAbs().maxCoeff()))
    throw SingularJacobian("initial guess has no first harmonic; the phase condition is degenerate");

  // Rotate the guess so the reference harmonic is real and positive.
  {
    const CVec coeffs = mode_coefficients(u);
    const double arg = std::arg(coeffs(pc * M + M / 2 + 1));
    u = translate(u, 1.0, -arg / two_pi);
  }

  const Eigen::MatrixXd D1 = differentiation_matrix(M, 1);
  const Eigen::MatrixXd D2 = differentiation_matrix(M, 2);
  const Eigen::MatrixXd lin = k * k * D2;
  Vec phase_row = Vec::Zero(n * M);
  for (int i = 0; i < M; ++i) phase_row(pc * M + i) = std::sin(two_pi * i / M) / M;

  const int dim = n * M + 1;
  double c = options.c_guess;
  Vec X(dim);
  for (int s = 0; s < n; ++s) X.segment(s * M, M) = u.col(s);
  X(dim - 1) = c;

  auto unpack = [&](const Vec& x) {
    Field v(M, n);
    for (int s = 0; s < n; ++s) v.col(s) = x.segment(s * M, M);
    return v;
  };

  auto residual = [&](const Vec& x) {
    const Field v = unpack(x);
    const Field F = profile_residual(system, k, x(dim - 1), v);
    Vec r(dim);
    for (int s = 0; s < n; ++s) r.segment(s * M, M) = F.col(s);
    r(dim - 1) = phase_row.dot(x.head(n * M));
    return r;
  };

  Vec r = residual(X);
  int iter = 0;
  double correction = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Jloc(n, n);
  while (true) {
    if (iter >= 1 && r.cwiseAbs().maxCoeff() <= options.tol) break;
    if (iter >= options.max_iter) {
      std::ostringstream msg;
      msg << "Newton stalled after " << iter << " iterations, residual " << r.cwiseAbs().maxCoeff();
      throw NoConvergence(msg.str());
    }
    const Field v = unpack(X);
    const double cc = X(dim - 1);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
    for (int s = 0; s < n; ++s) {
      J.block(s * M, s * M, M, M) = lin + k * cc * D1;
      J.block(s * M, dim - 1, M, 1) = k * (D1 * v.col(s));
    }
    Vec ui(n);
    for (int i = 0; i < M; ++i) {
      ui = v.row(i).transpose();
      system.jacobian(ui.data(), Jloc.data());
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) J(a * M + i, b * M + i) += Jloc(a, b);
    }
    J.block(dim - 1, 0, 1, n * M) = phase_row.transpose();

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    if (!(lu.rcond() > 1e-14)) throw SingularJacobian("collocation Jacobian is numerically singular");
    const Vec dX = lu.solve(-r);
    X += dX;
    correction = dX.cwiseAbs().maxCoeff();
    ++iter;
    if (!X.allFinite()) throw NoConvergence("Newton iterate became non-finite");
    r = residual(X);
  }

  WaveProfile p;
  p.k_star = k;
  p.c = X(dim - 1);
  p.M = M;
  p.n = n;
  p.values = unpack(X);
  p.newton_iterations = iter;
  p.last_correction = correction;
  p.phase_component = pc;
  finalize_profile(system, p);
  if (p.deriv.cwiseAbs().maxCoeff() < 1e-8) throw SingularJacobian("Newton collapsed onto a constant state");
  return p;
}

namespace {

WaveProfile advance(const ReactionSystem& system, const WaveProfile& from, double k_target, int depth,
                    const ProfileOptions& options) {
  ProfileOptions o = options;
  o.c_guess = from.c;
  try {
    return solve_profile(system, k_target, from.values, from.M, o);
  } catch (const Error&) {
    if (depth >= 5) {
      std::ostringstream msg;
      msg << "continuation failed beyond k = " << from.k_star << " (target " << k_target << ")";
      throw NoConvergence(msg.str());
    }
    const WaveProfile mid = advance(system, from, 0.5 * (from.k_star + k_target), depth + 1, options);
    return advance(system, mid, k_target, depth + 1, options);
  }
}

}  // namespace

ProfileFamily continue_family(const ReactionSystem& system, const WaveProfile& base, double delta_k, int n_steps,
                              const ProfileOptions& options) {
  if (n_steps < 0) throw InvalidParameter("n_steps must be >= 0");
  if (n_steps > 0 && !(delta_k > 0.0)) throw InvalidParameter("delta_k must be positive");
  if (base.residual_norm > 1e-8) throw PreconditionViolation("base profile does not satisfy its equation");

  std::vector<WaveProfile> lower, upper;
  WaveProfile cur = base;
  for (int j = 1; j <= n_steps; ++j) {
    cur = advance(system, cur, base.k_star - j * delta_k, 0, options);
    lower.push_back(cur);
  }
  cur = base;
  for (int j = 1; j <= n_steps; ++j) {
    cur = advance(system, cur, base.k_star + j * delta_k, 0, options);
    upper.push_back(cur);
  }

  ProfileFamily fam;
  for (auto it = lower.rbegin(); it != lower.rend(); ++it) fam.profiles.push_back(*it);
  fam.base_index = n_steps;
  fam.profiles.push_back(base);
  for (auto& p : upper) fam.profiles.push_back(p);

  const int count = static_cast<int>(fam.profiles.size());
  for (int j = 0; j < count; ++j) {
    const double k = base.k_star + (j - n_steps) * delta_k;
    fam.k_grid.push_back(k);
    fam.c_of_k.push_back(fam.profiles[j].c);
    fam.omega_of_k.push_back(-fam.profiles[j].c * k);
  }
  for (int j = 0; j < count; ++j) {
    if (count == 1) {
      fam.dk_profile.push_back(Field::Zero(base.M, base.n));
    } else if (j == 0) {
      fam.dk_profile.push_back((fam.profiles[1].values - fam.profiles[0].values) / delta_k);
    } else if (j == count - 1) {
      fam.dk_profile.push_back((fam.profiles[j].values - fam.profiles[j - 1].values) / delta_k);
    } else {
      fam.dk_profile.push_back((fam.profiles[j + 1].values - fam.profiles[j - 1].values) / (2.0 * delta_k));
    }
  }
  return fam;
}

}  // namespace modwave
