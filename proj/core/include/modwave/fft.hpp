#pragma once

#include "modwave/common.hpp"

namespace modwave {

// Thin FFTW wrappers. Forward transforms are unnormalized, inverse
// transforms divide by n. Plans are cached per size and shared across
// threads.
CVec fft(const CVec& in);
CVec ifft(const CVec& in);
void fft_inplace(cplx* data, int n, bool inverse);

// Real-to-half-complex forward (n/2+1 outputs) and its normalized inverse.
CVec rfft(const Vec& in);
Vec irfft(const CVec& in, int n);
void rfft(const double* in, cplx* out, int n);
void irfft(const cplx* in, double* out, int n);  // unnormalized, destroys `in`

}  // namespace modwave
