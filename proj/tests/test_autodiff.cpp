#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "hsigan/errors.hpp"
#include "hsigan/losses.hpp"
#include "hsigan/optimizer.hpp"
#include "hsigan/rng.hpp"
#include "hsigan/tape.hpp"

using namespace hsigan;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

// Inputs for activation checks stay away from the LReLU/ReLU kink so the
// central difference is trustworthy at h = 1e-4.
Tensor random_tensor_away_from_zero(Rng& rng, std::vector<int> shape) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    t[i] = sign * rng.uniform(0.05, 1.0);
  }
  return t;
}

// Central finite differences of a scalar-valued function, coordinate by
// coordinate. The independent oracle every analytic gradient is checked
// against.
Tensor fd_gradient(const Tensor& x, const std::function<double(const Tensor&)>& f,
                   double h = 1e-4) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

void check_close(const Tensor& analytic, const Tensor& fd, double tol = 1e-4) {
  REQUIRE(analytic.same_shape(fd));
  for (std::int64_t i = 0; i < analytic.numel(); ++i) {
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(fd[i])});
    CHECK(std::abs(analytic[i] - fd[i]) / denom <= tol);
  }
}

// Deterministic weights that turn any tensor output into a scalar.
double weighted_sum(const Tensor& t, const Tensor& weights) { return dot(t, weights); }

}  // namespace

TEST_CASE("conv gradients match finite differences for input, kernel and bias") {
  Rng rng(101);
  for (int trial = 0; trial < 5; ++trial) {
    const Stride3 s{1 + static_cast<int>(rng.uniform_index(2)), 1,
                    1 + static_cast<int>(rng.uniform_index(2))};
    const Tensor x = random_tensor(rng, {4, 3, 4, 2});
    const Tensor k = random_tensor(rng, {3, 2, 3, 2, 2});
    const Tensor b = random_tensor(rng, {2});
    const Tensor w = random_tensor(rng, conv3d(x, k, b, s).shape());

    Tape tape;
    const int xi = tape.param(0, x);
    const int ki = tape.param(1, k);
    const int bi = tape.param(2, b);
    const int out = tape.conv(xi, ki, bi, s);
    tape.backward(out, w);

    check_close(*tape.grad_for_key(0),
                fd_gradient(x, [&](const Tensor& t) { return weighted_sum(conv3d(t, k, b, s), w); }));
    check_close(*tape.grad_for_key(1),
                fd_gradient(k, [&](const Tensor& t) { return weighted_sum(conv3d(x, t, b, s), w); }));
    check_close(*tape.grad_for_key(2),
                fd_gradient(b, [&](const Tensor& t) { return weighted_sum(conv3d(x, k, t, s), w); }));
  }
}

TEST_CASE("transposed conv gradients match finite differences") {
  Rng rng(102);
  for (int trial = 0; trial < 5; ++trial) {
    const Stride3 s{1 + static_cast<int>(rng.uniform_index(3)), 1,
                    1 + static_cast<int>(rng.uniform_index(2))};
    const Tensor x = random_tensor(rng, {2, 3, 2, 3});  // c_out = 3
    const Tensor k = random_tensor(rng, {3, 3, 2, 2, 3});
    const Tensor b = random_tensor(rng, {2});
    const Tensor w = random_tensor(rng, transposed_conv3d(x, k, b, s).shape());

    Tape tape;
    const int xi = tape.param(0, x);
    const int ki = tape.param(1, k);
    const int bi = tape.param(2, b);
    const int out = tape.transposed_conv(xi, ki, bi, s);
    tape.backward(out, w);

    check_close(*tape.grad_for_key(0), fd_gradient(x, [&](const Tensor& t) {
                  return weighted_sum(transposed_conv3d(t, k, b, s), w);
                }));
    check_close(*tape.grad_for_key(1), fd_gradient(k, [&](const Tensor& t) {
                  return weighted_sum(transposed_conv3d(x, t, b, s), w);
                }));
    check_close(*tape.grad_for_key(2), fd_gradient(b, [&](const Tensor& t) {
                  return weighted_sum(transposed_conv3d(x, k, t, s), w);
                }));
  }
}

TEST_CASE("dense, pooling and activation gradients match finite differences") {
  Rng rng(103);
  const Tensor x = random_tensor(rng, {6});
  const Tensor w = random_tensor(rng, {6, 4});
  const Tensor b = random_tensor(rng, {4});
  const Tensor probe_w = random_tensor(rng, {4});

  {
    Tape tape;
    const int xi = tape.param(0, x);
    const int wi = tape.param(1, w);
    const int bi = tape.param(2, b);
    const int out = tape.dense_op(xi, wi, bi);
    tape.backward(out, probe_w);
    check_close(*tape.grad_for_key(0),
                fd_gradient(x, [&](const Tensor& t) { return weighted_sum(dense(t, w, b), probe_w); }));
    check_close(*tape.grad_for_key(1),
                fd_gradient(w, [&](const Tensor& t) { return weighted_sum(dense(x, t, b), probe_w); }));
    check_close(*tape.grad_for_key(2),
                fd_gradient(b, [&](const Tensor& t) { return weighted_sum(dense(x, w, t), probe_w); }));
  }

  const Tensor x4 = random_tensor(rng, {3, 3, 4, 2});
  const Tensor probe_c = random_tensor(rng, {2});
  {
    Tape tape;
    const int xi = tape.param(0, x4);
    tape.backward(tape.global_pool(xi), probe_c);
    check_close(*tape.grad_for_key(0),
                fd_gradient(x4, [&](const Tensor& t) { return weighted_sum(global_avg_pool(t), probe_c); }));
  }
  {
    Tape tape;
    const int xi = tape.param(0, x4);
    tape.backward(tape.center_pool(xi), probe_c);
    check_close(*tape.grad_for_key(0), fd_gradient(x4, [&](const Tensor& t) {
                  return weighted_sum(center_spectral_pool(t), probe_c);
                }));
  }

  for (Act act : {Act::Relu, Act::Lrelu, Act::Tanh}) {
    const Tensor xa = random_tensor_away_from_zero(rng, {12});
    const Tensor probe = random_tensor(rng, {12});
    Tape tape;
    const int xi = tape.param(0, xa);
    tape.backward(tape.activation(xi, act, 0.2), probe);
    check_close(*tape.grad_for_key(0), fd_gradient(xa, [&](const Tensor& t) {
                  Tensor y = t;
                  apply_activation(y, act, 0.2);
                  return weighted_sum(y, probe);
                }));
  }
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(104);
  const int num_classes = 5;
  for (int trial = 0; trial < 8; ++trial) {
    const Tensor logits = random_tensor(rng, {num_classes + 1}, 3.0);
    const int label = 1 + static_cast<int>(rng.uniform_index(num_classes));

    {
      Tape tape;
      const int li = tape.param(0, logits);
      tape.backward(tape.loss_supervised_op(li, label, num_classes));
      check_close(*tape.grad_for_key(0), fd_gradient(logits, [&](const Tensor& t) {
                    return loss_supervised(t, label, num_classes);
                  }));
    }
    {
      Tape tape;
      const int li = tape.param(0, logits);
      tape.backward(tape.loss_unsup_real_op(li, num_classes));
      check_close(*tape.grad_for_key(0), fd_gradient(logits, [&](const Tensor& t) {
                    return loss_unsup_real(t, num_classes);
                  }));
    }
    {
      Tape tape;
      const int li = tape.param(0, logits);
      tape.backward(tape.loss_unsup_fake_op(li, num_classes));
      check_close(*tape.grad_for_key(0), fd_gradient(logits, [&](const Tensor& t) {
                    return loss_unsup_fake(t, num_classes);
                  }));
    }
  }
}

TEST_CASE("feature-matching composite gradient matches finite differences") {
  Rng rng(105);
  const Tensor a = random_tensor(rng, {6});
  const Tensor b = random_tensor(rng, {6});
  const Tensor target = random_tensor(rng, {6});

  const auto loss_of = [&](const Tensor& ta, const Tensor& tb) {
    Tensor mean({6});
    for (int i = 0; i < 6; ++i) mean[i] = 0.5 * (ta[i] + tb[i]);
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += (mean[i] - target[i]) * (mean[i] - target[i]);
    return s;
  };

  Tape tape;
  const int ai = tape.param(0, a);
  const int bi = tape.param(1, b);
  const int mean = tape.mean_tensors({ai, bi});
  const int loss = tape.squared_distance(mean, tape.input(target));
  tape.backward(loss);

  check_close(*tape.grad_for_key(0),
              fd_gradient(a, [&](const Tensor& t) { return loss_of(t, b); }));
  check_close(*tape.grad_for_key(1),
              fd_gradient(b, [&](const Tensor& t) { return loss_of(a, t); }));
}

TEST_CASE("loss = sum(conv(x)) with identity kernel has all-ones input gradient") {
  Rng rng(106);
  const Tensor x = random_tensor(rng, {3, 3, 2, 1});
  Tensor k({1, 1, 1, 1, 1});
  k[0] = 1.0;

  Tape tape;
  const int xi = tape.param(0, x);
  const int ki = tape.input(k);
  const int out = tape.conv(xi, ki, -1, {1, 1, 1});
  tape.backward(out, Tensor::full(tape.value(out).shape(), 1.0));

  const Tensor& g = *tape.grad_for_key(0);
  for (std::int64_t i = 0; i < g.numel(); ++i) CHECK(g[i] == doctest::Approx(1.0));
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  Rng rng(107);
  const Tensor x = random_tensor(rng, {3, 3, 2, 1});
  const Tensor k = random_tensor(rng, {3, 3, 1, 1, 2});

  Tape tape;
  const int xi = tape.input(x);
  const int ki = tape.param(0, k);
  const int out = tape.conv(xi, ki, -1, {1, 1, 1});
  tape.backward(out, Tensor(tape.value(out).shape()));  // zero seed

  const Tensor* g = tape.grad_for_key(0);
  REQUIRE(g != nullptr);
  for (std::int64_t i = 0; i < g->numel(); ++i) CHECK((*g)[i] == 0.0);
}

TEST_CASE("a consumed tape cannot be replayed") {
  Tape tape;
  const int xi = tape.param(0, Tensor::scalar(2.0));
  const int out = tape.activation(xi, Act::Tanh);
  tape.backward(out);
  CHECK_THROWS_AS(tape.backward(out), StateError);
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
  ParamSet params;
  params.add("w", Tensor::full({3}, 1.5));
  const Tensor zero({3});
  Adam opt;
  opt.step(params, {&zero});
  for (int i = 0; i < 3; ++i) CHECK(params[0][i] == doctest::Approx(1.5));
}

TEST_CASE("adam first step with unit gradient moves by about lr") {
  // With bias correction, m_hat = 1 and v_hat = 1 on step one, so the update
  // is lr / (1 + eps) regardless of the betas.
  ParamSet params;
  params.add("w", Tensor::full({1}, 3.0));
  Tensor g({1});
  g[0] = 1.0;
  AdamConfig cfg;
  cfg.lr = 0.1;
  Adam opt(cfg);
  opt.step(params, {&g});
  CHECK(params[0][0] == doctest::Approx(3.0 - 0.1).epsilon(1e-6));
}

TEST_CASE("adam drives a quadratic bowl to the minimum") {
  ParamSet params;
  params.add("w", Tensor::full({1}, 2.0));
  AdamConfig cfg;
  cfg.lr = 0.05;
  Adam opt(cfg);
  for (int i = 0; i < 200; ++i) {
    Tensor g({1});
    g[0] = 2.0 * params[0][0];  // d/dw of w^2
    opt.step(params, {&g});
  }
  CHECK(std::abs(params[0][0]) <= 1e-2);
}

TEST_CASE("adam rejects non-finite gradients loudly") {
  ParamSet params;
  params.add("w", Tensor::full({2}, 1.0));
  Tensor g({2});
  g[0] = std::numeric_limits<double>::quiet_NaN();
  Adam opt;
  CHECK_THROWS_AS(opt.step(params, {&g}), NumericError);
}
