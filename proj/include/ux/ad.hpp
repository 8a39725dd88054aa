#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ux/tensor.hpp"

namespace ux::ad {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Forward evaluation happens eagerly as ops are applied;
/// backward() walks the nodes in reverse creation order, so gradient
/// accumulation is single-threaded and deterministic. Parallelism lives inside
/// the kernels, over disjoint output slices only.
class Tape {
 public:
  using BackFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var make(Tensor value, const std::vector<Var>& parents, BackFn back);

  const Tensor& val(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].rg; }

  /// Gradient accumulated for v by the last backward(); zeros if none reached it.
  const Tensor& grad(Var v) const;
  void accumulate(Var v, const Tensor& g);

  /// Seeds d(root)/d(root) = 1 and propagates; root must be scalar.
  void backward(Var root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // lazily allocated
    bool rg = false;
    bool grad_live = false;
    BackFn back;
  };
  std::vector<Node> nodes_;
  mutable Tensor scratch_zeros_;
};

// ---- elementwise and reduction ops ----
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var add_const(Tape& t, Var a, const Tensor& c);
Var sigmoid(Tape& t, Var a);
Var gelu(Tape& t, Var a);
Var sum_all(Tape& t, Var a);
Var mean_all(Tape& t, Var a);
/// Mean absolute difference over all elements (the L1 training loss).
Var l1_diff_mean(Tape& t, Var a, Var b);

// ---- linear algebra ----
Var matmul(Tape& t, Var a, Var b);           // (m x k)(k x n)
Var matvec(Tape& t, Var a, Var x);           // (m x n)(n) -> m
Var vecmat(Tape& t, Var x, Var a);           // (m)(m x n) -> n
Var add_rowvec(Tape& t, Var a, Var b);       // (m x n) + (n) broadcast over rows
Var mean_axis0(Tape& t, Var a);              // (m x n) -> n

// ---- shape ops ----
Var reshape(Tape& t, Var a, std::vector<int> shape);
/// out[i] = map[i] >= 0 ? a[map[i]] : 0. Backward scatter-adds through map.
Var reindex(Tape& t, Var a, std::shared_ptr<const std::vector<std::int64_t>> map,
            std::vector<int> out_shape);
/// Stacks same-shape tensors along a new leading axis.
Var stack0(Tape& t, const std::vector<Var>& parts);

// ---- neural-net ops ----
Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps);
/// Softmax over the last axis; optional additive mask (same shape, use large
/// negatives to disable entries).
Var softmax_last(Tape& t, Var x, const Tensor* additive_mask = nullptr);

/// 3x3 same-padded convolution as im2col + matmul. x: {h*w, cin} with explicit
/// dims; weight: {3,3,cin,cout}; bias: {cout}. Returns {h*w, cout}.
Var conv3x3(Tape& t, Var x, int h, int w, Var weight, Var bias);

/// Scaled dot-product attention with a single query: softmax(q.K^T * scale +
/// mask) . V. keys {n, d}, values {n, dv}, mask length n (additive).
Var attend_single(Tape& t, Var q, Var keys, Var values, const Tensor* mask, double scale);

// ---- spectral ops (real-input transform; spectra are {2, bins, C}) ----
Var dft_forward(Tape& t, Var x, int h, int w);           // x {h*w, C} -> {2, h*wf, C}
Var dft_inverse(Tape& t, Var spec, int h, int w);        // -> {h*w, C}

/// Beta filter bank evaluated on fixed normalized positions. kappa: {N};
/// log_ratio: {N, B} precomputed g(x_b; mode_n) with -inf where the filter
/// vanishes. Returns {N, B} weights in [0, 1], exp((kappa-2) * g).
Var beta_filters(Tape& t, Var kappa, std::shared_ptr<const Tensor> log_ratio);

/// Fused band modulation + aggregation: out[s,b,c] = sum_n w[n,c] * filt[n,b]
/// * spec[s,b,c]. spec {2,B,C}, filt {N,B}, weights {N,C} -> {2,B,C}.
Var modulate(Tape& t, Var spec, Var filt, Var weights);

}  // namespace ux::ad
