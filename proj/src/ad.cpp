#include "ux/ad.hpp"

#include <cmath>
#include <limits>

#include "ux/errors.hpp"
#include "ux/kernels.hpp"
#include "ux/parallel.hpp"

namespace ux::ad {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         Tensor::shape_string(a.shape()) + " vs " +
                         Tensor::shape_string(b.shape()));
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.rg = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::make(Tensor value, const std::vector<Var>& parents, BackFn back) {
  Node n;
  n.value = std::move(value);
  for (Var p : parents) n.rg = n.rg || nodes_[static_cast<std::size_t>(p.id)].rg;
  if (n.rg) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad_live) return n.grad;
  scratch_zeros_ = Tensor::zeros(n.value.shape());
  return scratch_zeros_;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (!n.rg) return;
  check_same_shape(n.value, g, "accumulate");
  if (!n.grad_live) {
    n.grad = g;
    n.grad_live = true;
    return;
  }
  for (std::int64_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

void Tape::backward(Var root) {
  if (val(root).size() != 1) throw DimensionError("backward root must be scalar");
  for (auto& n : nodes_) {
    n.grad_live = false;
    n.grad = Tensor();
  }
  Node& r = nodes_[static_cast<std::size_t>(root.id)];
  r.grad = Tensor::full(r.value.shape(), 1.0);
  r.grad_live = true;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.rg && n.grad_live && n.back) n.back(*this, n.grad);
  }
}

Var add(Tape& t, Var a, Var b) {
  check_same_shape(t.val(a), t.val(b), "add");
  Tensor out = t.val(a);
  const Tensor& vb = t.val(b);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return t.make(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  check_same_shape(t.val(a), t.val(b), "sub");
  Tensor out = t.val(a);
  const Tensor& vb = t.val(b);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return t.make(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    Tensor neg = g;
    for (std::int64_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
    t.accumulate(b, neg);
  });
}

Var mul(Tape& t, Var a, Var b) {
  check_same_shape(t.val(a), t.val(b), "mul");
  Tensor out = t.val(a);
  const Tensor& vb = t.val(b);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return t.make(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    Tensor ga = g, gb = g;
    const Tensor& va = t.val(a);
    const Tensor& vb2 = t.val(b);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      ga[i] *= vb2[i];
      gb[i] *= va[i];
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

Var scale(Tape& t, Var a, double s) {
  Tensor out = t.val(a);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= s;
  return t.make(std::move(out), {a}, [a, s](Tape& t, const Tensor& g) {
    Tensor ga = g;
    for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] *= s;
    t.accumulate(a, ga);
  });
}

Var add_const(Tape& t, Var a, const Tensor& c) {
  check_same_shape(t.val(a), c, "add_const");
  Tensor out = t.val(a);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return t.make(std::move(out), {a}, [a](Tape& t, const Tensor& g) { t.accumulate(a, g); });
}

Var sigmoid(Tape& t, Var a) {
  Tensor out = t.val(a);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  Tensor y = out;
  return t.make(std::move(out), {a}, [a, y = std::move(y)](Tape& t, const Tensor& g) {
    Tensor ga = g;
    for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] *= y[i] * (1.0 - y[i]);
    t.accumulate(a, ga);
  });
}

Var gelu(Tape& t, Var a) {
  const Tensor& x = t.val(a);
  Tensor out = x;
  for (std::int64_t i = 0; i < out.size(); ++i)
    out[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * kInvSqrt2));
  return t.make(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    const Tensor& x2 = t.val(a);
    Tensor ga = g;
    for (std::int64_t i = 0; i < ga.size(); ++i) {
      const double cdf = 0.5 * (1.0 + std::erf(x2[i] * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x2[i] * x2[i]);
      ga[i] *= cdf + x2[i] * pdf;
    }
    t.accumulate(a, ga);
  });
}

Var sum_all(Tape& t, Var a) {
  double s = 0.0;
  const Tensor& va = t.val(a);
  for (std::int64_t i = 0; i < va.size(); ++i) s += va[i];
  return t.make(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    t.accumulate(a, Tensor::full(t.val(a).shape(), g[0]));
  });
}

Var mean_all(Tape& t, Var a) {
  const double inv = 1.0 / static_cast<double>(t.val(a).size());
  double s = 0.0;
  const Tensor& va = t.val(a);
  for (std::int64_t i = 0; i < va.size(); ++i) s += va[i];
  return t.make(Tensor::scalar(s * inv), {a}, [a, inv](Tape& t, const Tensor& g) {
    t.accumulate(a, Tensor::full(t.val(a).shape(), g[0] * inv));
  });
}

Var l1_diff_mean(Tape& t, Var a, Var b) {
  check_same_shape(t.val(a), t.val(b), "l1_diff_mean");
  const Tensor& va = t.val(a);
  const Tensor& vb = t.val(b);
  const double inv = 1.0 / static_cast<double>(va.size());
  double s = 0.0;
  for (std::int64_t i = 0; i < va.size(); ++i) s += std::abs(va[i] - vb[i]);
  return t.make(Tensor::scalar(s * inv), {a, b}, [a, b, inv](Tape& t, const Tensor& g) {
    const Tensor& va2 = t.val(a);
    const Tensor& vb2 = t.val(b);
    Tensor ga(va2.shape()), gb(vb2.shape());
    for (std::int64_t i = 0; i < va2.size(); ++i) {
      const double d = va2[i] - vb2[i];
      const double s2 = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      ga[i] = g[0] * inv * s2;
      gb[i] = -ga[i];
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& va = t.val(a);
  const Tensor& vb = t.val(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0))
    throw DimensionError("matmul: incompatible shapes " + Tensor::shape_string(va.shape()) +
                         " x " + Tensor::shape_string(vb.shape()));
  const int m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  Tensor out({m, n});
  parallel_for(m, [&](std::int64_t i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += va.at(static_cast<int>(i), p) * vb.at(p, j);
      out.at(static_cast<int>(i), j) = s;
    }
  });
  return t.make(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g) {
    const Tensor& va2 = t.val(a);
    const Tensor& vb2 = t.val(b);
    Tensor ga({m, k});
    parallel_for(m, [&](std::int64_t i) {
      for (int p = 0; p < k; ++p) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += g.at(static_cast<int>(i), j) * vb2.at(p, j);
        ga.at(static_cast<int>(i), p) = s;
      }
    });
    Tensor gb({k, n});
    parallel_for(k, [&](std::int64_t p) {
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += va2.at(i, static_cast<int>(p)) * g.at(i, j);
        gb.at(static_cast<int>(p), j) = s;
      }
    });
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

Var matvec(Tape& t, Var a, Var x) {
  const Tensor& va = t.val(a);
  const Tensor& vx = t.val(x);
  if (va.rank() != 2 || vx.rank() != 1 || va.dim(1) != vx.dim(0))
    throw DimensionError("matvec: incompatible shapes");
  const int m = va.dim(0), n = va.dim(1);
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += va.at(i, j) * vx[j];
    out[i] = s;
  }
  return t.make(std::move(out), {a, x}, [a, x, m, n](Tape& t, const Tensor& g) {
    const Tensor& va2 = t.val(a);
    const Tensor& vx2 = t.val(x);
    Tensor ga({m, n}), gx({n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        ga.at(i, j) = g[i] * vx2[j];
        gx[j] += va2.at(i, j) * g[i];
      }
    t.accumulate(a, ga);
    t.accumulate(x, gx);
  });
}

Var vecmat(Tape& t, Var x, Var a) {
  const Tensor& vx = t.val(x);
  const Tensor& va = t.val(a);
  if (va.rank() != 2 || vx.rank() != 1 || va.dim(0) != vx.dim(0))
    throw DimensionError("vecmat: incompatible shapes");
  const int m = va.dim(0), n = va.dim(1);
  Tensor out({n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j] += vx[i] * va.at(i, j);
  return t.make(std::move(out), {x, a}, [x, a, m, n](Tape& t, const Tensor& g) {
    const Tensor& vx2 = t.val(x);
    const Tensor& va2 = t.val(a);
    Tensor gx({m}), ga({m, n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        gx[i] += va2.at(i, j) * g[j];
        ga.at(i, j) = vx2[i] * g[j];
      }
    t.accumulate(x, gx);
    t.accumulate(a, ga);
  });
}

Var add_rowvec(Tape& t, Var a, Var b) {
  const Tensor& va = t.val(a);
  const Tensor& vb = t.val(b);
  if (va.rank() != 2 || vb.rank() != 1 || va.dim(1) != vb.dim(0))
    throw DimensionError("add_rowvec: incompatible shapes");
  const int m = va.dim(0), n = va.dim(1);
  Tensor out = va;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) += vb[j];
  return t.make(std::move(out), {a, b}, [a, b, m, n](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    Tensor gb({n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) gb[j] += g.at(i, j);
    t.accumulate(b, gb);
  });
}

Var mean_axis0(Tape& t, Var a) {
  const Tensor& va = t.val(a);
  if (va.rank() != 2) throw DimensionError("mean_axis0 expects rank-2");
  const int m = va.dim(0), n = va.dim(1);
  Tensor out({n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j] += va.at(i, j);
  const double inv = 1.0 / m;
  for (int j = 0; j < n; ++j) out[j] *= inv;
  return t.make(std::move(out), {a}, [a, m, n, inv](Tape& t, const Tensor& g) {
    Tensor ga({m, n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) ga.at(i, j) = g[j] * inv;
    t.accumulate(a, ga);
  });
}

Var reshape(Tape& t, Var a, std::vector<int> shape) {
  const Tensor& va = t.val(a);
  if (Tensor::count(shape) != va.size())
    throw DimensionError("reshape: element count mismatch");
  Tensor out(shape, va.vec());
  return t.make(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    t.accumulate(a, Tensor(t.val(a).shape(), g.vec()));
  });
}

Var reindex(Tape& t, Var a, std::shared_ptr<const std::vector<std::int64_t>> map,
            std::vector<int> out_shape) {
  const Tensor& va = t.val(a);
  if (static_cast<std::int64_t>(map->size()) != Tensor::count(out_shape))
    throw DimensionError("reindex: map size does not match output shape");
  Tensor out(out_shape);
  const auto& m = *map;
  for (std::size_t i = 0; i < m.size(); ++i)
    out[static_cast<std::int64_t>(i)] = m[i] >= 0 ? va[m[i]] : 0.0;
  return t.make(std::move(out), {a}, [a, map](Tape& t, const Tensor& g) {
    Tensor ga(t.val(a).shape());
    const auto& m2 = *map;
    for (std::size_t i = 0; i < m2.size(); ++i)
      if (m2[i] >= 0) ga[m2[i]] += g[static_cast<std::int64_t>(i)];
    t.accumulate(a, ga);
  });
}

Var stack0(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("stack0 of zero tensors");
  const Tensor& first = t.val(parts[0]);
  for (const Var& p : parts) check_same_shape(first, t.val(p), "stack0");
  const std::int64_t inner = first.size();
  std::vector<int> shape;
  shape.push_back(static_cast<int>(parts.size()));
  for (int d : first.shape()) shape.push_back(d);
  Tensor out(shape);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = t.val(parts[p]);
    for (std::int64_t i = 0; i < inner; ++i) out[static_cast<std::int64_t>(p) * inner + i] = v[i];
  }
  return t.make(std::move(out), parts, [parts, inner](Tape& t, const Tensor& g) {
    for (std::size_t p = 0; p < parts.size(); ++p) {
      Tensor gp(t.val(parts[p]).shape());
      for (std::int64_t i = 0; i < inner; ++i) gp[i] = g[static_cast<std::int64_t>(p) * inner + i];
      t.accumulate(parts[p], gp);
    }
  });
}

Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps) {
  const Tensor& vx = t.val(x);
  const Tensor& vg = t.val(gamma);
  const Tensor& vb = t.val(beta);
  if (vg.rank() != 1 || vb.rank() != 1) throw DimensionError("layer_norm: affine params rank-1");
  const int c = vg.dim(0);
  if (vb.dim(0) != c || vx.size() % c != 0)
    throw DimensionError("layer_norm: channel mismatch");
  const std::int64_t rows = vx.size() / c;

  Tensor out(vx.shape());
  Tensor xhat(vx.shape());
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = vx.data() + r * c;
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += xr[j];
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(r)] = inv;
    for (int j = 0; j < c; ++j) {
      const double xh = (xr[j] - mu) * inv;
      xhat[r * c + j] = xh;
      out[r * c + j] = vg[j] * xh + vb[j];
    }
  }
  return t.make(std::move(out), {x, gamma, beta},
                [x, gamma, beta, c, rows, xhat = std::move(xhat),
                 inv_std = std::move(inv_std)](Tape& t, const Tensor& g) {
                  const Tensor& vg2 = t.val(gamma);
                  Tensor gx(t.val(x).shape());
                  Tensor gg({c}), gb({c});
                  for (std::int64_t r = 0; r < rows; ++r) {
                    const double inv = inv_std[static_cast<std::size_t>(r)];
                    double mean_gxh = 0.0, mean_gxh_xh = 0.0;
                    for (int j = 0; j < c; ++j) {
                      const double gy = g[r * c + j];
                      const double xh = xhat[r * c + j];
                      gg[j] += gy * xh;
                      gb[j] += gy;
                      const double gxh = gy * vg2[j];
                      mean_gxh += gxh;
                      mean_gxh_xh += gxh * xh;
                    }
                    mean_gxh /= c;
                    mean_gxh_xh /= c;
                    for (int j = 0; j < c; ++j) {
                      const double gxh = g[r * c + j] * vg2[j];
                      gx[r * c + j] = inv * (gxh - mean_gxh - xhat[r * c + j] * mean_gxh_xh);
                    }
                  }
                  t.accumulate(x, gx);
                  t.accumulate(gamma, gg);
                  t.accumulate(beta, gb);
                });
}

Var softmax_last(Tape& t, Var x, const Tensor* additive_mask) {
  const Tensor& vx = t.val(x);
  if (vx.rank() < 1) throw DimensionError("softmax_last on scalarless tensor");
  const int n = vx.dim(vx.rank() - 1);
  const std::int64_t rows = vx.size() / n;
  Tensor masked = vx;
  if (additive_mask) {
    check_same_shape(vx, *additive_mask, "softmax_last mask");
    for (std::int64_t i = 0; i < masked.size(); ++i) masked[i] += (*additive_mask)[i];
  }
  Tensor out(vx.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = masked.data() + r * n;
    double mx = xr[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(xr[j] - mx);
      out[r * n + j] = e;
      z += e;
    }
    for (int j = 0; j < n; ++j) out[r * n + j] /= z;
  }
  Tensor y = out;
  return t.make(std::move(out), {x},
                [x, n, rows, y = std::move(y)](Tape& t, const Tensor& g) {
                  Tensor gx(t.val(x).shape());
                  for (std::int64_t r = 0; r < rows; ++r) {
                    double dot = 0.0;
                    for (int j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
                    for (int j = 0; j < n; ++j)
                      gx[r * n + j] = y[r * n + j] * (g[r * n + j] - dot);
                  }
                  t.accumulate(x, gx);
                });
}

Var conv3x3(Tape& t, Var x, int h, int w, Var weight, Var bias) {
  const Tensor& vx = t.val(x);
  const Tensor& vw = t.val(weight);
  if (vx.rank() != 2 || vx.dim(0) != h * w) throw DimensionError("conv3x3: x must be {h*w, cin}");
  if (vw.rank() != 4 || vw.dim(0) != 3 || vw.dim(1) != 3 || vw.dim(2) != vx.dim(1))
    throw DimensionError("conv3x3: weight must be {3,3,cin,cout}");
  const int cin = vx.dim(1);
  const int cout = vw.dim(3);

  auto map = std::make_shared<std::vector<std::int64_t>>();
  map->resize(static_cast<std::size_t>(h) * w * 9 * cin);
  std::size_t pos = 0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int p = i + dy, q = j + dx;
          const bool in = p >= 0 && p < h && q >= 0 && q < w;
          for (int c = 0; c < cin; ++c)
            (*map)[pos++] = in ? (static_cast<std::int64_t>(p) * w + q) * cin + c : -1;
        }

  Var cols = reindex(t, x, map, {h * w, 9 * cin});
  Var w2 = reshape(t, weight, {9 * cin, cout});
  return add_rowvec(t, matmul(t, cols, w2), bias);
}

Var attend_single(Tape& t, Var q, Var keys, Var values, const Tensor* mask, double scalefac) {
  Var scores = scale(t, matvec(t, keys, q), scalefac);
  if (mask) scores = add_const(t, scores, *mask);
  Var w = softmax_last(t, scores);
  return vecmat(t, w, values);
}

Var dft_forward(Tape& t, Var x, int h, int w) {
  const Tensor& vx = t.val(x);
  if (vx.rank() != 2 || vx.dim(0) != h * w) throw DimensionError("dft_forward: x must be {h*w, C}");
  const int ch = vx.dim(1);
  const int wf = kern::rfft_cols(w);
  const std::int64_t half = static_cast<std::int64_t>(h) * wf * ch;
  Tensor out({2, h * wf, ch});
  kern::dft2_forward(vx.data(), h, w, ch, true, out.data(), out.data() + half);
  return t.make(std::move(out), {x}, [x, h, w, ch, half](Tape& t, const Tensor& g) {
    Tensor gx(t.val(x).shape());
    kern::dft2_forward_adjoint(g.data(), g.data() + half, h, w, ch, gx.data());
    t.accumulate(x, gx);
  });
}

Var dft_inverse(Tape& t, Var spec, int h, int w) {
  const Tensor& vs = t.val(spec);
  const int wf = kern::rfft_cols(w);
  if (vs.rank() != 3 || vs.dim(0) != 2 || vs.dim(1) != h * wf)
    throw DimensionError("dft_inverse: spectrum must be {2, h*wf, C}");
  const int ch = vs.dim(2);
  const std::int64_t half = static_cast<std::int64_t>(h) * wf * ch;
  Tensor out({h * w, ch});
  kern::dft2_inverse(vs.data(), vs.data() + half, h, w, ch, true, out.data());
  return t.make(std::move(out), {spec}, [spec, h, w, ch, half](Tape& t, const Tensor& g) {
    Tensor gs(t.val(spec).shape());
    kern::dft2_inverse_adjoint(g.data(), h, w, ch, gs.data(), gs.data() + half);
    t.accumulate(spec, gs);
  });
}

Var beta_filters(Tape& t, Var kappa, std::shared_ptr<const Tensor> log_ratio) {
  const Tensor& vk = t.val(kappa);
  if (vk.rank() != 1 || log_ratio->rank() != 2 || log_ratio->dim(0) != vk.dim(0))
    throw DimensionError("beta_filters: kappa {N} and log_ratio {N,B} required");
  const int n = vk.dim(0), b = log_ratio->dim(1);
  Tensor out({n, b});
  for (int i = 0; i < n; ++i) {
    const double k2 = vk[i] - 2.0;
    for (int j = 0; j < b; ++j) {
      const double g = log_ratio->at(i, j);
      if (std::isinf(g))
        out.at(i, j) = k2 > 0.0 ? 0.0 : 1.0;
      else
        out.at(i, j) = std::exp(k2 * g);
    }
  }
  return t.make(std::move(out), {kappa}, [kappa, log_ratio, n, b](Tape& t, const Tensor& g) {
    const Tensor& vk2 = t.val(kappa);
    Tensor gk({n});
    for (int i = 0; i < n; ++i) {
      const double k2 = vk2[i] - 2.0;
      double s = 0.0;
      for (int j = 0; j < b; ++j) {
        const double lr = log_ratio->at(i, j);
        if (std::isinf(lr)) continue;  // filter pinned to 0 there; no kappa sensitivity
        s += g.at(i, j) * lr * std::exp(k2 * lr);
      }
      gk[i] = s;
    }
    t.accumulate(kappa, gk);
  });
}

Var modulate(Tape& t, Var spec, Var filt, Var weights) {
  const Tensor& vs = t.val(spec);
  const Tensor& vf = t.val(filt);
  const Tensor& vw = t.val(weights);
  if (vs.rank() != 3 || vs.dim(0) != 2) throw DimensionError("modulate: spec must be {2,B,C}");
  const int bins = vs.dim(1), ch = vs.dim(2);
  if (vf.rank() != 2 || vf.dim(1) != bins || vw.rank() != 2 || vw.dim(0) != vf.dim(0) ||
      vw.dim(1) != ch)
    throw DimensionError("modulate: filt {N,B} / weights {N,C} mismatch");
  const int n = vf.dim(0);

  // agg[b,c] = sum_n weights[n,c] * filt[n,b]
  Tensor agg({bins, ch});
  for (int in = 0; in < n; ++in)
    for (int bI = 0; bI < bins; ++bI) {
      const double f = vf.at(in, bI);
      for (int c = 0; c < ch; ++c) agg.at(bI, c) += vw.at(in, c) * f;
    }
  Tensor out(vs.shape());
  for (int s = 0; s < 2; ++s)
    for (int bI = 0; bI < bins; ++bI)
      for (int c = 0; c < ch; ++c) out.at(s, bI, c) = agg.at(bI, c) * vs.at(s, bI, c);

  return t.make(std::move(out), {spec, filt, weights},
                [spec, filt, weights, n, bins, ch, agg = std::move(agg)](Tape& t,
                                                                         const Tensor& g) {
                  const Tensor& vs2 = t.val(spec);
                  const Tensor& vf2 = t.val(filt);
                  const Tensor& vw2 = t.val(weights);

                  Tensor gspec(vs2.shape());
                  for (int s = 0; s < 2; ++s)
                    for (int bI = 0; bI < bins; ++bI)
                      for (int c = 0; c < ch; ++c)
                        gspec.at(s, bI, c) = agg.at(bI, c) * g.at(s, bI, c);
                  t.accumulate(spec, gspec);

                  // m[b,c] = sum_s spec[s,b,c] * g[s,b,c]
                  Tensor m({bins, ch});
                  for (int s = 0; s < 2; ++s)
                    for (int bI = 0; bI < bins; ++bI)
                      for (int c = 0; c < ch; ++c)
                        m.at(bI, c) += vs2.at(s, bI, c) * g.at(s, bI, c);

                  Tensor gf({n, bins}), gw({n, ch});
                  for (int in = 0; in < n; ++in)
                    for (int bI = 0; bI < bins; ++bI) {
                      double sf = 0.0;
                      for (int c = 0; c < ch; ++c) {
                        sf += vw2.at(in, c) * m.at(bI, c);
                        gw.at(in, c) += vf2.at(in, bI) * m.at(bI, c);
                      }
                      gf.at(in, bI) = sf;
                    }
                  t.accumulate(filt, gf);
                  t.accumulate(weights, gw);
                });
}

}  // namespace ux::ad
