#include "ux/kernels.hpp"

#include <cmath>
#include <cstdint>

#include "ux/parallel.hpp"

namespace ux::kern {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Twiddle table: cos/sin(2*pi*m/n) for m in [0, n); indexed by (a*b) % n.
struct Twiddle {
  std::vector<double> c, s;
  explicit Twiddle(int n) : c(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n)) {
    for (int m = 0; m < n; ++m) {
      c[static_cast<std::size_t>(m)] = std::cos(kTwoPi * m / n);
      s[static_cast<std::size_t>(m)] = std::sin(kTwoPi * m / n);
    }
  }
};

}  // namespace

int rfft_cols(int w) { return w / 2 + 1; }

double hermitian_weight(int l, int w) {
  if (l == 0) return 1.0;
  if (w % 2 == 0 && l == w / 2) return 1.0;
  return 2.0;
}

void dft2_forward(const double* x, int h, int w, int channels, bool real_input, double* re,
                  double* im) {
  const int wf = real_input ? rfft_cols(w) : w;
  const Twiddle tw(w), th(h);

  // Stage 1: DFT along width per row. mid: h x wf x channels complex.
  std::vector<double> mid_re(static_cast<std::size_t>(h) * wf * channels);
  std::vector<double> mid_im(mid_re.size());
  parallel_for(static_cast<std::int64_t>(h) * wf, [&](std::int64_t pl) {
    const int p = static_cast<int>(pl / wf);
    const int l = static_cast<int>(pl % wf);
    for (int c = 0; c < channels; ++c) {
      double sr = 0.0, si = 0.0;
      for (int q = 0; q < w; ++q) {
        const int m = static_cast<int>((static_cast<std::int64_t>(l) * q) % w);
        const double v = x[(static_cast<std::size_t>(p) * w + q) * channels + c];
        sr += v * tw.c[static_cast<std::size_t>(m)];
        si -= v * tw.s[static_cast<std::size_t>(m)];
      }
      mid_re[(static_cast<std::size_t>(p) * wf + l) * channels + c] = sr;
      mid_im[(static_cast<std::size_t>(p) * wf + l) * channels + c] = si;
    }
  });

  // Stage 2: DFT along height per column.
  parallel_for(static_cast<std::int64_t>(h) * wf, [&](std::int64_t kl) {
    const int k = static_cast<int>(kl / wf);
    const int l = static_cast<int>(kl % wf);
    for (int c = 0; c < channels; ++c) {
      double sr = 0.0, si = 0.0;
      for (int p = 0; p < h; ++p) {
        const int m = static_cast<int>((static_cast<std::int64_t>(k) * p) % h);
        const double ar = mid_re[(static_cast<std::size_t>(p) * wf + l) * channels + c];
        const double ai = mid_im[(static_cast<std::size_t>(p) * wf + l) * channels + c];
        const double cw = th.c[static_cast<std::size_t>(m)];
        const double sw = th.s[static_cast<std::size_t>(m)];
        sr += ar * cw + ai * sw;
        si += ai * cw - ar * sw;
      }
      re[(static_cast<std::size_t>(k) * wf + l) * channels + c] = sr;
      im[(static_cast<std::size_t>(k) * wf + l) * channels + c] = si;
    }
  });
}

void dft2_inverse(const double* re, const double* im, int h, int w, int channels, bool real_input,
                  double* x) {
  const int wf = real_input ? rfft_cols(w) : w;
  const Twiddle tw(w), th(h);
  const double norm = 1.0 / (static_cast<double>(h) * w);

  // Stage 1: inverse DFT along height (positive exponent), complex result.
  std::vector<double> mid_re(static_cast<std::size_t>(h) * wf * channels);
  std::vector<double> mid_im(mid_re.size());
  parallel_for(static_cast<std::int64_t>(h) * wf, [&](std::int64_t pl) {
    const int p = static_cast<int>(pl / wf);
    const int l = static_cast<int>(pl % wf);
    for (int c = 0; c < channels; ++c) {
      double sr = 0.0, si = 0.0;
      for (int k = 0; k < h; ++k) {
        const int m = static_cast<int>((static_cast<std::int64_t>(k) * p) % h);
        const double ar = re[(static_cast<std::size_t>(k) * wf + l) * channels + c];
        const double ai = im[(static_cast<std::size_t>(k) * wf + l) * channels + c];
        const double cw = th.c[static_cast<std::size_t>(m)];
        const double sw = th.s[static_cast<std::size_t>(m)];
        sr += ar * cw - ai * sw;
        si += ai * cw + ar * sw;
      }
      mid_re[(static_cast<std::size_t>(p) * wf + l) * channels + c] = sr;
      mid_im[(static_cast<std::size_t>(p) * wf + l) * channels + c] = si;
    }
  });

  // Stage 2: inverse along width; real part only. Hermitian multiplicities
  // stand in for the dropped columns of the real-input layout.
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t pq) {
    const int p = static_cast<int>(pq / w);
    const int q = static_cast<int>(pq % w);
    for (int c = 0; c < channels; ++c) {
      double s = 0.0;
      for (int l = 0; l < wf; ++l) {
        const int m = static_cast<int>((static_cast<std::int64_t>(l) * q) % w);
        const double ar = mid_re[(static_cast<std::size_t>(p) * wf + l) * channels + c];
        const double ai = mid_im[(static_cast<std::size_t>(p) * wf + l) * channels + c];
        const double term =
            ar * tw.c[static_cast<std::size_t>(m)] - ai * tw.s[static_cast<std::size_t>(m)];
        s += real_input ? hermitian_weight(l, w) * term : term;
      }
      x[(static_cast<std::size_t>(p) * w + q) * channels + c] = s * norm;
    }
  });
}

void dft2_forward_adjoint(const double* gre, const double* gim, int h, int w, int channels,
                          double* gx) {
  // Adjoint of the stored-bin forward map: h*w * inverse(g with the Hermitian
  // multiplicities divided out).
  const int wf = rfft_cols(w);
  std::vector<double> sre(static_cast<std::size_t>(h) * wf * channels);
  std::vector<double> sim(sre.size());
  for (int k = 0; k < h; ++k)
    for (int l = 0; l < wf; ++l) {
      const double inv_m = 1.0 / hermitian_weight(l, w);
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = (static_cast<std::size_t>(k) * wf + l) * channels + c;
        sre[i] = gre[i] * inv_m;
        sim[i] = gim[i] * inv_m;
      }
    }
  dft2_inverse(sre.data(), sim.data(), h, w, channels, true, gx);
  const double hw = static_cast<double>(h) * w;
  const std::int64_t n = static_cast<std::int64_t>(h) * w * channels;
  for (std::int64_t i = 0; i < n; ++i) gx[i] *= hw;
}

void dft2_inverse_adjoint(const double* gx, int h, int w, int channels, double* gre, double* gim) {
  // Adjoint of the Hermitian-reconstructing inverse: (m_l / (h*w)) * forward.
  const int wf = rfft_cols(w);
  dft2_forward(gx, h, w, channels, true, gre, gim);
  const double inv_hw = 1.0 / (static_cast<double>(h) * w);
  for (int k = 0; k < h; ++k)
    for (int l = 0; l < wf; ++l) {
      const double f = hermitian_weight(l, w) * inv_hw;
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = (static_cast<std::size_t>(k) * wf + l) * channels + c;
        gre[i] *= f;
        gim[i] *= f;
      }
    }
}

void conv3x3(const double* x, int h, int w, int cin, const double* weight, const double* bias,
             int cout, double* out) {
  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t ij) {
    const int i = static_cast<int>(ij / w);
    const int j = static_cast<int>(ij % w);
    for (int o = 0; o < cout; ++o) out[(ij)*cout + o] = bias ? bias[o] : 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
      const int p = i + dy;
      if (p < 0 || p >= h) continue;
      for (int dx = -1; dx <= 1; ++dx) {
        const int q = j + dx;
        if (q < 0 || q >= w) continue;
        const double* xr = &x[(static_cast<std::size_t>(p) * w + q) * cin];
        const double* wr = &weight[((static_cast<std::size_t>(dy + 1) * 3 + (dx + 1)) * cin) * cout];
        for (int c = 0; c < cin; ++c)
          for (int o = 0; o < cout; ++o) out[(ij)*cout + o] += xr[c] * wr[c * cout + o];
      }
    }
  });
}

}  // namespace ux::kern
