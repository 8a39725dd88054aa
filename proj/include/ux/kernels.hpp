#pragma once

#include <vector>

namespace ux::kern {

// Production kernels shared by the eager operations and the autodiff ops.
// Multi-channel, channels-last, separable row/column transforms, OpenMP over
// independent output slices (bit-reproducible for any thread count).

int rfft_cols(int w);  // floor(w/2) + 1

/// Unnormalized forward 2-D DFT, negative exponent, per channel. When
/// real_input is set only the first rfft_cols(w) columns are produced.
/// re/im: h x w_f x channels.
void dft2_forward(const double* x, int h, int w, int channels, bool real_input, double* re,
                  double* im);

/// Inverse with the 1/(h*w) factor. For real_input the missing columns are
/// reconstructed by Hermitian symmetry; for full spectra the real part of the
/// reconstruction is returned. x: h x w x channels.
void dft2_inverse(const double* re, const double* im, int h, int w, int channels, bool real_input,
                  double* x);

/// Hermitian column multiplicity for the real-input layout: 2 for columns with
/// a dropped conjugate mirror, 1 for the self-conjugate columns.
double hermitian_weight(int l, int w);

/// Adjoint of dft2_forward (real_input): maps spectrum cotangents to grid
/// cotangents. gx: h x w x channels.
void dft2_forward_adjoint(const double* gre, const double* gim, int h, int w, int channels,
                          double* gx);

/// Adjoint of dft2_inverse (real_input): maps grid cotangents to spectrum
/// cotangents.
void dft2_inverse_adjoint(const double* gx, int h, int w, int channels, double* gre, double* gim);

/// 3x3 same-padded convolution (zero pad), layouts as in ref::conv3x3.
void conv3x3(const double* x, int h, int w, int cin, const double* weight, const double* bias,
             int cout, double* out);

}  // namespace ux::kern
