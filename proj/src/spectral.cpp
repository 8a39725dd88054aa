#include "ux/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ux/errors.hpp"
#include "ux/kernels.hpp"

namespace ux::spectral {

Spectrum forward_transform(const double* data, int h, int w, int channels, TransformKind kind) {
  if (h < 1 || w < 1 || channels < 1) throw DimensionError("transform needs dims >= 1");
  Spectrum spec;
  spec.kind = kind;
  spec.h = h;
  spec.w = w;
  spec.w_f = kind == TransformKind::real_input ? kern::rfft_cols(w) : w;
  spec.channels = channels;
  spec.re.assign(static_cast<std::size_t>(h) * spec.w_f * channels, 0.0);
  spec.im.assign(spec.re.size(), 0.0);
  kern::dft2_forward(data, h, w, channels, kind == TransformKind::real_input, spec.re.data(),
                     spec.im.data());
  return spec;
}

Spectrum forward_transform(const std::vector<double>& data, int h, int w, int channels,
                           TransformKind kind) {
  if (static_cast<std::int64_t>(data.size()) != static_cast<std::int64_t>(h) * w * channels)
    throw DimensionError("field buffer does not match dims");
  return forward_transform(data.data(), h, w, channels, kind);
}

std::vector<double> inverse_transform(const Spectrum& spec) {
  const std::size_t expected = static_cast<std::size_t>(spec.h) * spec.w_f * spec.channels;
  if (spec.re.size() != expected || spec.im.size() != expected)
    throw DimensionError("spectrum buffers do not match declared shape");
  std::vector<double> x(static_cast<std::size_t>(spec.h) * spec.w * spec.channels);
  kern::dft2_inverse(spec.re.data(), spec.im.data(), spec.h, spec.w, spec.channels,
                     spec.kind == TransformKind::real_input, x.data());
  return x;
}

std::vector<double> spectral_energy(const Spectrum& spec) {
  std::vector<double> energy(spec.re.size());
  for (int k = 0; k < spec.h; ++k)
    for (int l = 0; l < spec.w_f; ++l) {
      const double weight =
          spec.kind == TransformKind::real_input ? kern::hermitian_weight(l, spec.w) : 1.0;
      for (int c = 0; c < spec.channels; ++c) {
        const std::size_t i = (static_cast<std::size_t>(k) * spec.w_f + l) * spec.channels + c;
        energy[i] = weight * (spec.re[i] * spec.re[i] + spec.im[i] * spec.im[i]);
      }
    }
  return energy;
}

RadialFrequencyIndex make_radial_index(int h, int w, TransformKind kind) {
  if (h < 1 || w < 1) throw DimensionError("radial index needs dims >= 1");
  RadialFrequencyIndex idx;
  idx.kind = kind;
  idx.h = h;
  idx.w = w;
  idx.w_f = kind == TransformKind::real_input ? kern::rfft_cols(w) : w;

  const int bins = idx.bins();
  idx.radial.resize(static_cast<std::size_t>(bins));
  for (int k = 0; k < h; ++k) {
    const double fh = static_cast<double>(std::min(k, h - k)) / h;
    for (int l = 0; l < idx.w_f; ++l) {
      const double fw = static_cast<double>(std::min(l, w - l)) / w;
      idx.radial[static_cast<std::size_t>(k) * idx.w_f + l] = std::sqrt(fh * fh + fw * fw);
    }
  }

  idx.order.resize(static_cast<std::size_t>(bins));
  std::iota(idx.order.begin(), idx.order.end(), 0);
  std::stable_sort(idx.order.begin(), idx.order.end(), [&](int a, int b) {
    return idx.radial[static_cast<std::size_t>(a)] < idx.radial[static_cast<std::size_t>(b)];
  });

  const double lo = idx.radial[static_cast<std::size_t>(idx.order.front())];
  const double hi = idx.radial[static_cast<std::size_t>(idx.order.back())];
  idx.norm_sorted.resize(static_cast<std::size_t>(bins));
  idx.norm_flat.resize(static_cast<std::size_t>(bins));
  if (hi > lo) {
    for (int s = 0; s < bins; ++s)
      idx.norm_sorted[static_cast<std::size_t>(s)] =
          (idx.radial[static_cast<std::size_t>(idx.order[static_cast<std::size_t>(s)])] - lo) /
          (hi - lo);
    for (int j = 0; j < bins; ++j)
      idx.norm_flat[static_cast<std::size_t>(j)] =
          (idx.radial[static_cast<std::size_t>(j)] - lo) / (hi - lo);
  }
  // hi == lo (single bin or degenerate layout): normalized radii stay 0.
  return idx;
}

std::vector<double> energy_ratio_curve(const std::vector<double>& energy,
                                       const RadialFrequencyIndex& idx, int channels, int channel) {
  const int bins = idx.bins();
  if (static_cast<std::int64_t>(energy.size()) != static_cast<std::int64_t>(bins) * channels)
    throw DimensionError("energy buffer does not match radial index");
  if (channel < 0 || channel >= channels) throw DimensionError("channel out of range");

  double total = 0.0;
  for (int j = 0; j < bins; ++j)
    total += energy[static_cast<std::size_t>(j) * channels + channel];
  if (!(total > 0.0))
    throw DegenerateSpectrum("energy ratio undefined for all-zero channel " +
                             std::to_string(channel));

  std::vector<double> eta(static_cast<std::size_t>(bins));
  double cum = 0.0;
  for (int s = 0; s < bins; ++s) {
    cum += energy[static_cast<std::size_t>(idx.order[static_cast<std::size_t>(s)]) * channels +
                  channel];
    eta[static_cast<std::size_t>(s)] = cum / total;
  }
  eta[static_cast<std::size_t>(bins - 1)] = 1.0;
  return eta;
}

double high_frequency_area(const std::vector<double>& eta, const RadialFrequencyIndex& idx) {
  const int bins = idx.bins();
  if (static_cast<int>(eta.size()) != bins)
    throw DimensionError("eta length does not match radial index");
  if (bins < 2) return 0.0;
  double area = 0.0;
  for (int s = 0; s + 1 < bins; ++s)
    area += (idx.norm_sorted[static_cast<std::size_t>(s + 1)] -
             idx.norm_sorted[static_cast<std::size_t>(s)]) *
            (1.0 - eta[static_cast<std::size_t>(s)]);
  return std::clamp(area, 0.0, 1.0);
}

double hfa_from_bins(const std::vector<double>& sorted_positions,
                     const std::vector<double>& sorted_energies) {
  const std::size_t n = sorted_positions.size();
  if (sorted_energies.size() != n) throw DimensionError("positions/energies length mismatch");
  if (n < 2) return 0.0;
  double total = 0.0;
  for (double e : sorted_energies) total += e;
  if (!(total > 0.0)) throw DegenerateSpectrum("all-zero energies");
  double area = 0.0, cum = 0.0;
  for (std::size_t s = 0; s + 1 < n; ++s) {
    cum += sorted_energies[s];
    area += (sorted_positions[s + 1] - sorted_positions[s]) * (1.0 - cum / total);
  }
  return std::clamp(area, 0.0, 1.0);
}

KdeCurve kde_1d(const std::vector<double>& samples, std::optional<double> bandwidth) {
  const std::size_t n = samples.size();
  if (n < 2) throw DegenerateSample("kde needs at least 2 samples");

  double bw;
  if (bandwidth) {
    bw = *bandwidth;
    if (!(bw > 0.0)) throw DegenerateSample("kde bandwidth must be positive");
  } else {
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(n - 1);
    if (!(var > 0.0)) throw DegenerateSample("kde bandwidth undefined for zero-variance samples");
    bw = std::sqrt(var) * std::pow(static_cast<double>(n), -0.2);  // Scott's rule
  }

  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it - 3.0 * bw, hi = *hi_it + 3.0 * bw;
  constexpr int kLatticePoints = 512;
  KdeCurve curve;
  curve.bandwidth = bw;
  curve.lattice.resize(kLatticePoints);
  curve.density.resize(kLatticePoints);
  const double step = (hi - lo) / (kLatticePoints - 1);
  const double norm = 1.0 / (static_cast<double>(n) * bw * std::sqrt(2.0 * 3.14159265358979323846));
  for (int i = 0; i < kLatticePoints; ++i) {
    const double x = lo + step * i;
    double acc = 0.0;
    for (double s : samples) {
      const double z = (x - s) / bw;
      acc += std::exp(-0.5 * z * z);
    }
    curve.lattice[static_cast<std::size_t>(i)] = x;
    curve.density[static_cast<std::size_t>(i)] = acc * norm;
  }
  return curve;
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw EmptySample("wasserstein1 needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t na = a.size(), nb = b.size();
  // Integrate |Qa(u) - Qb(u)| du exactly over the merged quantile breakpoints.
  double dist = 0.0, u = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < na && ib < nb) {
    const double next_a = static_cast<double>(ia + 1) / static_cast<double>(na);
    const double next_b = static_cast<double>(ib + 1) / static_cast<double>(nb);
    const double next = std::min(next_a, next_b);
    dist += (next - u) * std::abs(a[ia] - b[ib]);
    u = next;
    if (next_a <= next) ++ia;
    if (next_b <= next) ++ib;
  }
  return dist;
}

std::vector<double> hfa_of_weights(const Tensor& weights) {
  if (weights.rank() != 2) throw DimensionError("band weights must be N x C");
  const int n = weights.dim(0), channels = weights.dim(1);
  for (std::int64_t i = 0; i < weights.size(); ++i)
    if (weights[i] < 0.0) throw DomainError("band weights must be nonnegative");

  std::vector<double> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    positions[static_cast<std::size_t>(i)] = (static_cast<double>(i) + 0.5) / n;

  std::vector<double> out(static_cast<std::size_t>(channels));
  std::vector<double> energies(static_cast<std::size_t>(n));
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < n; ++i) energies[static_cast<std::size_t>(i)] = weights.at(i, c);
    out[static_cast<std::size_t>(c)] = hfa_from_bins(positions, energies);
  }
  return out;
}

}  // namespace ux::spectral
