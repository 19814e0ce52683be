#pragma once

#include "modwave/common.hpp"
#include "modwave/profile.hpp"

#include <vector>

namespace modwave {

// Bloch coefficients on an N-period torus: column r holds xi_r = -pi + 2 pi r / N,
// row c*M + (j + M/2) the j-th Fourier mode of component c of the periodic part.
struct BlochField {
  int periods = 0;
  int points = 0;
  int components = 0;
  Vec xi;
  CField coeffs;

  double dxi() const { return two_pi / periods; }
  int index(int component, int mode) const { return component * points + mode + points / 2; }
  // Fourier coefficient of periodic mode j at frequency column r corresponds
  // to total frequency xi_r + 2 pi j.
  double total_frequency(int r, int mode) const { return xi(r) + two_pi * mode; }
};

BlochField bloch_forward(const Field& g, const Grid& grid);
BlochField bloch_forward(const CField& g, const Grid& grid);
CField bloch_inverse_complex(const BlochField& field);
Field bloch_inverse(const BlochField& field);  // real part
BlochField zero_bloch_field(const Grid& grid, int components);

// Periodic part of one column evaluated on the M-point grid.
CField bloch_column_samples(const BlochField& field, int r);

// Galerkin matrix of k L_xi = k^2 (d + i xi)^2 + k c (d + i xi) + b in the
// truncated Fourier basis; the generator of the time evolution is scaled / k.
struct BlochOperatorMatrix {
  double xi = 0.0;
  double k = 1.0;
  Eigen::MatrixXcd scaled;

  Eigen::MatrixXcd generator() const { return scaled / k; }
};

BlochOperatorMatrix assemble_L_xi(const WaveProfile& profile, double xi);

struct BlochBranch {
  double xi = 0.0;
  cplx lambda = 0.0;
  CVec phi;        // mode coefficients of the right eigenfunction
  CVec phi_tilde;  // left eigenfunction, <phi_tilde, phi> = 1
  double overlap = 1.0;  // |<phi_prev, phi>| / (|phi_prev| |phi|) along the grid
};

// <f, g>_{L^2[0,1]} in mode coefficients.
cplx inner(const CVec& f, const CVec& g);

struct SpectralSummary {
  double theta = 0.0;
  double simplicity_margin = 0.0;
  double a = 0.0;
  double d = 0.0;
  double xi0 = 0.0;
  double spectral_gap = 0.0;
  double gap_at_zero = 0.0;
  double a_imag_residual = 0.0;  // |Re lambda'(0)|
  double d_imag_residual = 0.0;  // |Im lambda''(0)| / 2
  double lambda0 = 0.0;          // |lambda(0)|
  double min_branch_overlap = 1.0;
  double max_reconstruction_error = 0.0;
  int xi_count = 0;
  int M = 0;
};

// Full eigendecomposition at one frequency.
struct FloquetEigen {
  CVec lambda;
  Eigen::MatrixXcd V;
  Eigen::MatrixXcd Vinv;
  int critical = -1;
  cplx gauge = 1.0;  // phi = V.col(critical) * gauge
  double reconstruction_error = 0.0;
};

struct ScanOptions {
  bool keep_eigendata = false;
  int jobs = 0;
  double xi0_cap = pi / 2;
};

struct SpectralScan {
  SpectralSummary summary;
  Vec xi;
  std::vector<BlochBranch> branches;
  std::vector<CVec> spectra;
  std::vector<FloquetEigen> eigen;  // filled only with keep_eigendata
  int zero_index = 0;
};

// Throws StabilityViolation / SimplicityViolation when (D1)-(D2) fail.
SpectralScan spectrum_scan(const WaveProfile& profile, int xi_count, const ScanOptions& options = {});

struct Projection {
  CVec phi;
  CVec phi_tilde;

  CVec apply_p(const CVec& g) const { return phi * inner(phi_tilde, g); }
  CVec apply_tilde(const CVec& g) const { return g - apply_p(g); }
  Eigen::MatrixXcd matrix_p() const { return phi * phi_tilde.adjoint(); }
  Eigen::MatrixXcd matrix_tilde() const;
};

Projection projections(const BlochBranch& branch);

}  // namespace modwave
