#include <doctest.h>

#include <cmath>
#include <functional>

#include "ux/ad.hpp"
#include "ux/kernels.hpp"
#include "ux/ref_kernels.hpp"
#include "ux/rng.hpp"

using namespace ux;
using namespace ux::ad;

namespace {

Tensor random_tensor(std::vector<int> shape, SeededRng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Central-difference check of tape gradients for a scalar-valued graph over
/// the given leaf tensors. Returns the max relative error across all coords.
double gradcheck(std::vector<Tensor> inputs, const GraphFn& fn, double eps = 1e-5) {
  auto eval = [&](const std::vector<Tensor>& ins) {
    Tape t;
    std::vector<Var> leaves;
    leaves.reserve(ins.size());
    for (const auto& in : ins) leaves.push_back(t.leaf(in));
    return t.val(fn(t, leaves))[0];
  };

  Tape t;
  std::vector<Var> leaves;
  for (const auto& in : inputs) leaves.push_back(t.leaf(in));
  Var root = fn(t, leaves);
  t.backward(root);

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor& analytic = t.grad(leaves[i]);
    for (std::int64_t j = 0; j < inputs[i].size(); ++j) {
      auto plus = inputs;
      auto minus = inputs;
      plus[i][j] += eps;
      minus[i][j] -= eps;
      const double fd = (eval(plus) - eval(minus)) / (2 * eps);
      const double a = analytic[j];
      worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3}));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("elementwise and reduction op gradients") {
  SeededRng rng(1);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({3, 4}, rng);

  CHECK(gradcheck({a, b}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, mul(t, add(t, v[0], v[1]), sub(t, v[0], v[1])));
        }) < 1e-6);
  CHECK(gradcheck({a}, [](Tape& t, const std::vector<Var>& v) {
          return mean_all(t, sigmoid(t, scale(t, v[0], 1.7)));
        }) < 1e-6);
  CHECK(gradcheck({a}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, v[0]));
        }) < 1e-6);
  // abs is kinked at 0; random doubles keep a-b away from it.
  CHECK(gradcheck({a, b}, [](Tape& t, const std::vector<Var>& v) {
          return l1_diff_mean(t, v[0], v[1]);
        }) < 1e-6);
}

TEST_CASE("linear algebra op gradients") {
  SeededRng rng(2);
  auto a = random_tensor({3, 5}, rng);
  auto b = random_tensor({5, 2}, rng);
  auto x = random_tensor({5}, rng);
  auto y = random_tensor({3}, rng);
  auto bias = random_tensor({5}, rng);

  CHECK(gradcheck({a, b}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, matmul(t, v[0], v[1])));
        }) < 1e-6);
  CHECK(gradcheck({a, x}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, sigmoid(t, matvec(t, v[0], v[1])));
        }) < 1e-6);
  CHECK(gradcheck({y, a}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, vecmat(t, v[0], v[1])));
        }) < 1e-6);
  CHECK(gradcheck({a, bias}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, sigmoid(t, add_rowvec(t, v[0], v[1])));
        }) < 1e-6);
  CHECK(gradcheck({a}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, mean_axis0(t, v[0])));
        }) < 1e-6);
}

TEST_CASE("shape op gradients") {
  SeededRng rng(3);
  auto a = random_tensor({2, 6}, rng);
  CHECK(gradcheck({a}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, reshape(t, v[0], {3, 4})));
        }) < 1e-6);

  // Gather with duplicated and dropped entries.
  auto map = std::make_shared<std::vector<std::int64_t>>(std::vector<std::int64_t>{0, 0, 5, -1, 7, 11, 3, 3});
  CHECK(gradcheck({a}, [&](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, reindex(t, v[0], map, {4, 2})));
        }) < 1e-6);

  auto b = random_tensor({2, 6}, rng);
  auto c = random_tensor({2, 6}, rng);
  CHECK(gradcheck({a, b, c}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, stack0(t, {v[0], v[1], v[2]})));
        }) < 1e-6);
}

TEST_CASE("layer norm gradient") {
  SeededRng rng(4);
  auto x = random_tensor({4, 6}, rng);
  auto gamma = random_tensor({6}, rng, 0.5);
  auto beta = random_tensor({6}, rng, 0.5);
  CHECK(gradcheck({x, gamma, beta}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, layer_norm(t, v[0], v[1], v[2], 1e-5)));
        }) < 1e-5);
}

TEST_CASE("softmax gradient with and without mask") {
  SeededRng rng(5);
  auto x = random_tensor({3, 5}, rng);
  CHECK(gradcheck({x}, [](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, softmax_last(t, v[0])));
        }) < 1e-6);

  Tensor mask({3, 5});
  mask.at(0, 2) = -1e30;
  mask.at(2, 0) = -1e30;
  Tape t;
  Var vx = t.leaf(x);
  Var y = softmax_last(t, vx, &mask);
  CHECK(t.val(y).at(0, 2) == 0.0);
  CHECK(t.val(y).at(2, 0) == 0.0);
  double row = 0.0;
  for (int j = 0; j < 5; ++j) row += t.val(y).at(0, j);
  CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gradcheck({x}, [&](Tape& t2, const std::vector<Var>& v) {
          return sum_all(t2, gelu(t2, softmax_last(t2, v[0], &mask)));
        }) < 1e-6);
}

TEST_CASE("conv3x3 matches the reference kernel and differentiates") {
  SeededRng rng(6);
  const int h = 5, w = 4, cin = 3, cout = 2;
  auto x = random_tensor({h * w, cin}, rng);
  auto wgt = random_tensor({3, 3, cin, cout}, rng, 0.5);
  auto bias = random_tensor({cout}, rng, 0.5);

  Tape t;
  Var y = conv3x3(t, t.leaf(x), h, w, t.leaf(wgt), t.leaf(bias));
  std::vector<double> expected(static_cast<std::size_t>(h) * w * cout);
  ref::conv3x3(x.data(), h, w, cin, wgt.data(), bias.data(), cout, expected.data());
  for (std::int64_t i = 0; i < t.val(y).size(); ++i)
    CHECK(t.val(y)[i] == doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-12));

  CHECK(gradcheck({x, wgt, bias}, [&](Tape& t2, const std::vector<Var>& v) {
          return sum_all(t2, gelu(t2, conv3x3(t2, v[0], h, w, v[1], v[2])));
        }) < 1e-6);

  // Production kernel agrees with the reference.
  std::vector<double> prod(expected.size());
  kern::conv3x3(x.data(), h, w, cin, wgt.data(), bias.data(), cout, prod.data());
  for (std::size_t i = 0; i < prod.size(); ++i)
    CHECK(prod[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("attend_single matches dense attention and differentiates") {
  SeededRng rng(7);
  const int n = 4, d = 3, dv = 6;
  auto q = random_tensor({d}, rng);
  auto keys = random_tensor({n, d}, rng);
  auto values = random_tensor({n, dv}, rng);
  const double scalefac = 1.0 / std::sqrt(static_cast<double>(d));

  Tape t;
  Var out = attend_single(t, t.leaf(q), t.leaf(keys), t.leaf(values), nullptr, scalefac);
  std::vector<double> expected(static_cast<std::size_t>(dv));
  ref::dense_attention(q.data(), 1, d, keys.data(), n, values.data(), dv, nullptr, scalefac,
                       expected.data());
  for (int i = 0; i < dv; ++i)
    CHECK(t.val(out)[i] == doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-12));

  Tensor mask({n});
  mask[1] = -1e30;
  CHECK(gradcheck({q, keys, values}, [&](Tape& t2, const std::vector<Var>& v) {
          return sum_all(t2, gelu(t2, attend_single(t2, v[0], v[1], v[2], &mask, scalefac)));
        }) < 1e-6);
}

TEST_CASE("dft ops: adjoint identities and gradients") {
  SeededRng rng(8);
  const int h = 5, w = 6, c = 2;
  const int wf = kern::rfft_cols(w);
  auto x = random_tensor({h * w, c}, rng);

  // <F(x), y> == <x, F*(y)> for random cotangents y.
  Tensor y({2, h * wf, c});
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] = rng.normal();
  {
    Tape t;
    Var fx = dft_forward(t, t.leaf(x), h, w);
    double lhs = 0.0;
    for (std::int64_t i = 0; i < y.size(); ++i) lhs += t.val(fx)[i] * y[i];
    Tensor xadj({h * w, c});
    const std::int64_t half = static_cast<std::int64_t>(h) * wf * c;
    kern::dft2_forward_adjoint(y.data(), y.data() + half, h, w, c, xadj.data());
    double rhs = 0.0;
    for (std::int64_t i = 0; i < x.size(); ++i) rhs += x[i] * xadj[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }

  CHECK(gradcheck({x}, [&](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, dft_forward(t, v[0], h, w)));
        }) < 1e-6);

  Tensor spec({2, h * wf, c});
  for (std::int64_t i = 0; i < spec.size(); ++i) spec[i] = rng.normal();
  CHECK(gradcheck({spec}, [&](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, dft_inverse(t, v[0], h, w)));
        }) < 1e-6);

  // Round trip through the tape: inverse(forward(x)) == x.
  Tape t;
  Var back = dft_inverse(t, dft_forward(t, t.leaf(x), h, w), h, w);
  for (std::int64_t i = 0; i < x.size(); ++i)
    CHECK(t.val(back)[i] == doctest::Approx(x[i]).epsilon(1e-10));
}

TEST_CASE("beta_filters and modulate gradients") {
  SeededRng rng(9);
  const int n = 3, bins = 8, c = 2;

  Tensor log_ratio({n, bins});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < bins; ++j)
      log_ratio.at(i, j) = j == 0 && i == 0 ? -std::numeric_limits<double>::infinity()
                                            : -std::abs(rng.normal());
  auto lr = std::make_shared<const Tensor>(log_ratio);

  Tensor kappa({n});
  for (int i = 0; i < n; ++i) kappa[i] = 2.5 + rng.uniform(0.0, 3.0);

  CHECK(gradcheck({kappa}, [&](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, beta_filters(t, v[0], lr)));
        }) < 1e-6);

  auto spec = random_tensor({2, bins, c}, rng);
  auto weights = random_tensor({n, c}, rng);
  auto filt = random_tensor({n, bins}, rng);
  CHECK(gradcheck({spec, filt, weights}, [&](Tape& t, const std::vector<Var>& v) {
          return sum_all(t, gelu(t, modulate(t, v[0], v[1], v[2])));
        }) < 1e-6);

  // Value agrees with the reference quadruple loop.
  Tape t;
  Var out = modulate(t, t.leaf(spec), t.leaf(filt), t.leaf(weights));
  std::vector<double> ore(static_cast<std::size_t>(bins) * c), oim(ore.size());
  ref::modulate(spec.data(), spec.data() + bins * c, bins, c, filt.data(), n, weights.data(),
                ore.data(), oim.data());
  for (int b = 0; b < bins; ++b)
    for (int ch = 0; ch < c; ++ch) {
      CHECK(t.val(out).at(0, b, ch) == doctest::Approx(ore[static_cast<std::size_t>(b) * c + ch]));
      CHECK(t.val(out).at(1, b, ch) == doctest::Approx(oim[static_cast<std::size_t>(b) * c + ch]));
    }
}

TEST_CASE("tape evaluation is deterministic") {
  SeededRng rng(10);
  auto x = random_tensor({6, 6}, rng);
  auto run = [&]() {
    Tape t;
    Var v = t.leaf(x);
    Var y = softmax_last(t, matmul(t, v, v));
    t.backward(sum_all(t, gelu(t, y)));
    return std::make_pair(t.val(y).vec(), t.grad(v).vec());
  };
  auto [y1, g1] = run();
  auto [y2, g2] = run();
  CHECK(y1 == y2);
  CHECK(g1 == g2);
}
