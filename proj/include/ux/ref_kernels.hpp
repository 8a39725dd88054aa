#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace ux::ref {

// Naive serial reference implementations. These are deliberately written as
// literal textbook double sums, independent of the production kernels, and are
// used as oracles in the test suites and as the baseline in the kernel
// benchmark. Do not "optimize" them.

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Forward 2-D DFT of one channel, unnormalized, negative exponent:
/// F[k,l] = sum_{p,q} x[p,q] * exp(-2*pi*i*(k*p/h + l*q/w)).
inline void dft2_full(const double* x, int h, int w, double* re, double* im) {
  for (int k = 0; k < h; ++k)
    for (int l = 0; l < w; ++l) {
      double sr = 0.0, si = 0.0;
      for (int p = 0; p < h; ++p)
        for (int q = 0; q < w; ++q) {
          const double theta = kTwoPi * (static_cast<double>(k) * p / h +
                                         static_cast<double>(l) * q / w);
          sr += x[p * w + q] * std::cos(theta);
          si -= x[p * w + q] * std::sin(theta);
        }
      re[k * w + l] = sr;
      im[k * w + l] = si;
    }
}

/// Inverse 2-D DFT of one channel with the 1/(h*w) factor; returns the real
/// part of the reconstruction.
inline void idft2_full(const double* re, const double* im, int h, int w, double* x) {
  for (int p = 0; p < h; ++p)
    for (int q = 0; q < w; ++q) {
      double s = 0.0;
      for (int k = 0; k < h; ++k)
        for (int l = 0; l < w; ++l) {
          const double theta = kTwoPi * (static_cast<double>(k) * p / h +
                                         static_cast<double>(l) * q / w);
          s += re[k * w + l] * std::cos(theta) - im[k * w + l] * std::sin(theta);
        }
      x[p * w + q] = s / (static_cast<double>(h) * w);
    }
}

/// 3x3 same-padded convolution, channels-last layouts:
/// x: h*w*cin, weight: 3*3*cin*cout, bias: cout, out: h*w*cout.
inline void conv3x3(const double* x, int h, int w, int cin, const double* weight,
                    const double* bias, int cout, double* out) {
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int o = 0; o < cout; ++o) {
        double s = bias ? bias[o] : 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int p = i + dy, q = j + dx;
            if (p < 0 || p >= h || q < 0 || q >= w) continue;
            for (int c = 0; c < cin; ++c)
              s += x[(p * w + q) * cin + c] *
                   weight[(((dy + 1) * 3 + (dx + 1)) * cin + c) * cout + o];
          }
        out[(i * w + j) * cout + o] = s;
      }
}

/// Dense scaled dot-product attention: q rows n x d, k rows m x d, v rows
/// m x dv, optional additive mask n x m. Softmax over each score row.
inline void dense_attention(const double* q, int n, int d, const double* k, int m, const double* v,
                            int dv, const double* mask, double scale, double* out) {
  std::vector<double> row(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) {
    double mx = -1e300;
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += q[i * d + a] * k[j * d + a];
      s *= scale;
      if (mask) s += mask[i * m + j];
      row[static_cast<std::size_t>(j)] = s;
      mx = std::max(mx, s);
    }
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      row[static_cast<std::size_t>(j)] = std::exp(row[static_cast<std::size_t>(j)] - mx);
      z += row[static_cast<std::size_t>(j)];
    }
    for (int a = 0; a < dv; ++a) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += row[static_cast<std::size_t>(j)] * v[j * dv + a];
      out[i * dv + a] = s / z;
    }
  }
}

/// Band modulation + aggregation in one quadruple loop:
/// out[b,c] = sum_n w[n,c] * filt[n,b] * spec[b,c] over flat bins b.
inline void modulate(const double* spec_re, const double* spec_im, int bins, int channels,
                     const double* filt, int n_filters, const double* weights, double* out_re,
                     double* out_im) {
  for (int b = 0; b < bins; ++b)
    for (int c = 0; c < channels; ++c) {
      double sr = 0.0, si = 0.0;
      for (int n = 0; n < n_filters; ++n) {
        const double f = weights[n * channels + c] * filt[n * bins + b];
        sr += f * spec_re[b * channels + c];
        si += f * spec_im[b * channels + c];
      }
      out_re[b * channels + c] = sr;
      out_im[b * channels + c] = si;
    }
}

}  // namespace ux::ref
