#pragma once

#include <optional>
#include <vector>

#include "ux/tensor.hpp"

namespace ux::spectral {

enum class TransformKind { full, real_input };

/// Unnormalized forward 2-D DFT of a real field. The real-input kind stores
/// only the non-redundant floor(w/2)+1 columns; the dropped columns are
/// implied by Hermitian symmetry.
struct Spectrum {
  TransformKind kind = TransformKind::real_input;
  int h = 0;
  int w = 0;    // spatial width of the originating field
  int w_f = 0;  // stored columns: w (full) or floor(w/2)+1 (real-input)
  int channels = 0;
  std::vector<double> re, im;  // h x w_f x channels

  int bins() const { return h * w_f; }
  double re_at(int k, int l, int c) const {
    return re[(static_cast<std::size_t>(k) * w_f + l) * channels + c];
  }
  double im_at(int k, int l, int c) const {
    return im[(static_cast<std::size_t>(k) * w_f + l) * channels + c];
  }
};

Spectrum forward_transform(const double* data, int h, int w, int channels, TransformKind kind);
Spectrum forward_transform(const std::vector<double>& data, int h, int w, int channels,
                           TransformKind kind);

/// Inverse with the 1/(h*w) factor; exact round trip with forward_transform.
std::vector<double> inverse_transform(const Spectrum& spec);

/// Per-bin, per-channel spectral energy R^2 + I^2. Real-input bins that stand
/// for a dropped conjugate column are doubled so channel totals match the full
/// transform.
std::vector<double> spectral_energy(const Spectrum& spec);

/// Radial frequency machinery over the stored bin layout of one transform
/// kind: two-sided row frequencies min(k, h-k)/h, column frequencies l/w
/// (real-input) or min(l, w-l)/w (full), stable ascending sort, min-max
/// normalization.
struct RadialFrequencyIndex {
  TransformKind kind = TransformKind::real_input;
  int h = 0, w = 0, w_f = 0;
  std::vector<double> radial;       // per flat bin k*w_f + l, cycles/sample
  std::vector<int> order;           // ascending stable permutation of flat bins
  std::vector<double> norm_sorted;  // normalized radius of the s-th sorted bin
  std::vector<double> norm_flat;    // normalized radius per flat bin

  int bins() const { return h * w_f; }
};

RadialFrequencyIndex make_radial_index(int h, int w, TransformKind kind);

/// Cumulative energy proportion over sorted radial bins for one channel.
/// Entry K holds the proportion of the first K+1 sorted bins; the last entry
/// is exactly 1. energy is laid out like spectral_energy's result.
std::vector<double> energy_ratio_curve(const std::vector<double>& energy,
                                       const RadialFrequencyIndex& idx, int channels, int channel);

/// Area above the energy-ratio step curve over the normalized sorted radii:
/// sum over segments of width * (1 - eta). 0 = all energy at DC, 1 = all at
/// the maximal radius.
double high_frequency_area(const std::vector<double>& eta, const RadialFrequencyIndex& idx);

struct KdeCurve {
  std::vector<double> lattice;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Gaussian KDE on a 512-point lattice spanning [min - 3bw, max + 3bw].
/// Bandwidth defaults to Scott's rule.
KdeCurve kde_1d(const std::vector<double>& samples, std::optional<double> bandwidth = {});

/// Exact 1-D W1 between equal-weight empirical measures via quantile coupling.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// HFA of nonnegative per-band weights (N x C): bands act as energies placed
/// at the midpoints (n + 0.5)/N. Returns one value per channel.
std::vector<double> hfa_of_weights(const Tensor& weights);

/// Step-curve HFA over explicit (position, energy) bins; shared core for the
/// spectrum and band-weight paths.
double hfa_from_bins(const std::vector<double>& sorted_positions,
                     const std::vector<double>& sorted_energies);

}  // namespace ux::spectral
