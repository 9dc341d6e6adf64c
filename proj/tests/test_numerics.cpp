#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hsigan/errors.hpp"
#include "hsigan/layers.hpp"
#include "hsigan/rng.hpp"
#include "hsigan/tensor.hpp"

using namespace hsigan;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

// Literal direct convolution: six nested loops straight from the definition,
// independent of the library's loop structure. Same-padding geometry is part
// of the contract: out = ceil(in/stride), pad_before = floor(pad_total/2).
Tensor oracle_conv(const Tensor& in, const Tensor& k, const Tensor& bias, Stride3 s) {
  const int h = in.dim(0), w = in.dim(1), b = in.dim(2), ci = in.dim(3);
  const int kh = k.dim(0), kw = k.dim(1), kb = k.dim(2), co = k.dim(4);
  const int oh = (h + s.sh - 1) / s.sh, ow = (w + s.sw - 1) / s.sw, ob = (b + s.sb - 1) / s.sb;
  const int ph = std::max((oh - 1) * s.sh + kh - h, 0) / 2;
  const int pw = std::max((ow - 1) * s.sw + kw - w, 0) / 2;
  const int pb = std::max((ob - 1) * s.sb + kb - b, 0) / 2;

  Tensor out({oh, ow, ob, co});
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int oz = 0; oz < ob; ++oz)
        for (int c = 0; c < co; ++c) {
          double acc = bias.numel() > 0 ? bias[c] : 0.0;
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
              for (int kz = 0; kz < kb; ++kz)
                for (int q = 0; q < ci; ++q) {
                  const int y = oy * s.sh - ph + ky;
                  const int x = ox * s.sw - pw + kx;
                  const int z = oz * s.sb - pb + kz;
                  if (y < 0 || y >= h || x < 0 || x >= w || z < 0 || z >= b) continue;
                  acc += in.at4(y, x, z, q) *
                         k[(((static_cast<std::int64_t>(ky) * kw + kx) * kb + kz) * ci + q) * co + c];
                }
          out.at4(oy, ox, oz, c) = acc;
        }
  return out;
}

}  // namespace

TEST_CASE("conv3d with a 1x1x1 identity kernel is the identity") {
  Rng rng(1);
  const Tensor x = random_tensor(rng, {4, 3, 5, 1});
  Tensor k({1, 1, 1, 1, 1});
  k[0] = 1.0;
  const Tensor y = conv3d(x, k, Tensor({1}), {1, 1, 1});
  REQUIRE(y.shape() == x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("conv_forward with zero kernel and relu gives max(bias, 0)") {
  Rng rng(2);
  ConvLayerParams params;
  params.kernel = Tensor({3, 3, 3, 2, 2});
  params.bias = Tensor({2});
  params.bias[0] = 0.7;
  params.bias[1] = -0.3;
  params.stride = {1, 1, 1};

  const Tensor x = random_tensor(rng, {4, 4, 4, 2});
  const Tensor y = conv_forward(x, params, Act::Relu);
  for (int p = 0; p < y.numel() / 2; ++p) {
    CHECK(y[2 * p] == doctest::Approx(0.7));
    CHECK(y[2 * p + 1] == doctest::Approx(0.0));
  }
}

TEST_CASE("conv3d matches the six-nested-loop oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 12; ++trial) {
    const int h = 2 + static_cast<int>(rng.uniform_index(5));
    const int w = 2 + static_cast<int>(rng.uniform_index(5));
    const int b = 1 + static_cast<int>(rng.uniform_index(6));
    const int ci = 1 + static_cast<int>(rng.uniform_index(3));
    const int co = 1 + static_cast<int>(rng.uniform_index(4));
    const int kh = 1 + static_cast<int>(rng.uniform_index(3));
    const int kw = 1 + static_cast<int>(rng.uniform_index(3));
    const int kb = 1 + static_cast<int>(rng.uniform_index(4));
    const Stride3 s{1 + static_cast<int>(rng.uniform_index(2)),
                    1 + static_cast<int>(rng.uniform_index(2)),
                    1 + static_cast<int>(rng.uniform_index(3))};
    const Tensor x = random_tensor(rng, {h, w, b, ci});
    const Tensor k = random_tensor(rng, {kh, kw, kb, ci, co});
    const Tensor bias = random_tensor(rng, {co});

    const Tensor got = conv3d(x, k, bias, s);
    const Tensor want = oracle_conv(x, k, bias, s);
    REQUIRE(got.shape() == want.shape());
    for (std::int64_t i = 0; i < got.numel(); ++i)
      CHECK(std::abs(got[i] - want[i]) <= 1e-6);
  }
}

TEST_CASE("conv3d matches the oracle on the spec's 5x5x4x1x2 case") {
  Rng rng(4);
  const Tensor x = random_tensor(rng, {5, 5, 4, 1});
  const Tensor k = random_tensor(rng, {3, 3, 3, 1, 2});
  const Tensor bias = random_tensor(rng, {2});
  const Tensor got = conv3d(x, k, bias, {1, 1, 1});
  const Tensor want = oracle_conv(x, k, bias, {1, 1, 1});
  for (std::int64_t i = 0; i < got.numel(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-6);
}

TEST_CASE("conv3d rejects channel mismatches") {
  Rng rng(5);
  const Tensor x = random_tensor(rng, {4, 4, 4, 3});
  const Tensor k = random_tensor(rng, {3, 3, 3, 2, 4});  // c_in 2 != 3
  CHECK_THROWS_AS(conv3d(x, k, Tensor(), {1, 1, 1}), ShapeError);
}

TEST_CASE("transposed_conv3d with identity kernel and stride 1 is the identity") {
  Rng rng(6);
  const Tensor x = random_tensor(rng, {3, 4, 2, 1});
  Tensor k({1, 1, 1, 1, 1});
  k[0] = 1.0;
  const Tensor y = transposed_conv3d(x, k, Tensor(), {1, 1, 1});
  REQUIRE(y.shape() == x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("transposed_conv3d stride 2 doubles spatial extents") {
  Rng rng(7);
  const Tensor x = random_tensor(rng, {2, 2, 3, 4});
  const Tensor k = random_tensor(rng, {3, 3, 1, 2, 4});
  const Tensor y = transposed_conv3d(x, k, Tensor(), {2, 2, 1});
  CHECK(y.shape() == std::vector<int>{4, 4, 3, 2});
}

TEST_CASE("conv and transposed conv satisfy the inner-product adjoint identity") {
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const Stride3 s{1 + static_cast<int>(rng.uniform_index(3)),
                    1 + static_cast<int>(rng.uniform_index(3)),
                    1 + static_cast<int>(rng.uniform_index(3))};
    const int mh = 1 + static_cast<int>(rng.uniform_index(3));
    const int mw = 1 + static_cast<int>(rng.uniform_index(3));
    const int mb = 1 + static_cast<int>(rng.uniform_index(3));
    const int ci = 1 + static_cast<int>(rng.uniform_index(3));
    const int co = 1 + static_cast<int>(rng.uniform_index(3));
    const int kh = 1 + static_cast<int>(rng.uniform_index(4));
    const int kw = 1 + static_cast<int>(rng.uniform_index(4));
    const int kb = 1 + static_cast<int>(rng.uniform_index(4));

    // Adjoint pairing lives on stride-multiple extents.
    const Tensor x = random_tensor(rng, {mh * s.sh, mw * s.sw, mb * s.sb, ci});
    const Tensor y = random_tensor(rng, {mh, mw, mb, co});
    const Tensor k = random_tensor(rng, {kh, kw, kb, ci, co});

    const double lhs = dot(conv3d(x, k, Tensor(), s), y);
    const double rhs = dot(x, transposed_conv3d(y, k, Tensor(), s));
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-12});
    CHECK(std::abs(lhs - rhs) / scale <= 1e-5);
  }
}

TEST_CASE("pure spectral layers never mix spatial positions") {
  Rng rng(9);
  const Tensor x = random_tensor(rng, {5, 5, 6, 2});
  const Tensor k = random_tensor(rng, {1, 1, 3, 2, 3});
  const Tensor base = conv3d(x, k, Tensor(), {1, 1, 1});

  Tensor perturbed = x;
  perturbed.at4(1, 2, 3, 0) += 0.5;  // a spatial neighbor of (2,2)
  const Tensor shifted = conv3d(perturbed, k, Tensor(), {1, 1, 1});
  for (int y = 0; y < 5; ++y)
    for (int xx = 0; xx < 5; ++xx)
      for (int z = 0; z < 6; ++z)
        for (int c = 0; c < 3; ++c) {
          if (y == 1 && xx == 2) continue;
          CHECK(shifted.at4(y, xx, z, c) == base.at4(y, xx, z, c));
        }
}

TEST_CASE("pure spatial layers never mix spectral positions") {
  Rng rng(10);
  const Tensor x = random_tensor(rng, {5, 5, 6, 2});
  const Tensor k = random_tensor(rng, {3, 3, 1, 2, 3});
  const Tensor base = conv3d(x, k, Tensor(), {1, 1, 1});

  Tensor perturbed = x;
  perturbed.at4(2, 2, 4, 1) += 0.5;  // band 4 only
  const Tensor shifted = conv3d(perturbed, k, Tensor(), {1, 1, 1});
  for (int y = 0; y < 5; ++y)
    for (int xx = 0; xx < 5; ++xx)
      for (int z = 0; z < 6; ++z)
        for (int c = 0; c < 3; ++c) {
          if (z == 4) continue;
          CHECK(shifted.at4(y, xx, z, c) == base.at4(y, xx, z, c));
        }
}

TEST_CASE("lrelu branches and boundary") {
  Tensor x({3});
  x[0] = 2.0;
  x[1] = -1.0;
  x[2] = 0.0;
  const Tensor y = lrelu(x, 0.2);
  CHECK(y[0] == doctest::Approx(2.0));
  CHECK(y[1] == doctest::Approx(-0.2));
  CHECK(y[2] == doctest::Approx(0.0));

  Tensor z({1});
  CHECK_THROWS_AS(lrelu(z, 1.5), ParamError);
  CHECK_THROWS_AS(lrelu(z, 0.0), ParamError);
}

TEST_CASE("softmax of uniform logits is uniform") {
  Tensor logits({3});
  const Tensor p = softmax(logits);
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax is overflow-safe for huge logits") {
  Tensor logits({2});
  logits[0] = 1000.0;
  logits[1] = 0.0;
  const Tensor p = softmax(logits);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(p[0]));
}

TEST_CASE("softmax rows are simplex points and shift invariant") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    Tensor logits({4, 5});
    for (std::int64_t i = 0; i < logits.numel(); ++i) logits[i] = rng.uniform(-20.0, 20.0);
    const Tensor p = softmax(logits);
    for (int r = 0; r < 4; ++r) {
      double sum = 0.0;
      for (int c = 0; c < 5; ++c) {
        CHECK(p.at2(r, c) >= 0.0);
        sum += p.at2(r, c);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }

    const double shift = rng.uniform(-50.0, 50.0);
    Tensor shifted = logits;
    for (std::int64_t i = 0; i < shifted.numel(); ++i) shifted[i] += shift;
    const Tensor q = softmax(shifted);
    for (std::int64_t i = 0; i < p.numel(); ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
  }
}
