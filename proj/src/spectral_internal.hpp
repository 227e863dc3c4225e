#pragma once

#include <complex>

namespace shlab::detail {

// Real-to-complex transform of size n into n/2+1 coefficients (unnormalized,
// nonnegative frequencies only). Plans and buffers are cached per thread.
void fft_forward(int n, const double* in, std::complex<double>* out);

// Inverse of fft_forward including the 1/n normalization, so the roundtrip is
// the identity up to roundoff.
void fft_backward(int n, const std::complex<double>* in, double* out);

}  // namespace shlab::detail
