#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rgc/nn.hpp"
#include "rgc/rng.hpp"
#include "support/gradcheck.hpp"

using rgc::Tensor;

namespace {

Tensor random_param(rgc::Shape shape, rgc::Rng& rng, double lo = -1.0,
                    double hi = 1.0) {
  std::vector<double> v(static_cast<size_t>(rgc::numel(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_vector(std::move(shape), std::move(v), true);
}

Tensor iota(rgc::Shape shape) {
  std::vector<double> v(static_cast<size_t>(rgc::numel(shape)));
  std::iota(v.begin(), v.end(), 1.0);
  return Tensor::from_vector(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("orthogonal init is orthonormal") {
  rgc::Rng rng(3);
  const Tensor q = rgc::orthogonal(12, rng);
  // Q^T Q by hand.
  for (int64_t i = 0; i < 12; ++i) {
    for (int64_t j = 0; j < 12; ++j) {
      double dot = 0.0;
      for (int64_t k = 0; k < 12; ++k) {
        dot += q.data()[static_cast<size_t>(k * 12 + i)] *
               q.data()[static_cast<size_t>(k * 12 + j)];
      }
      CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("dense layer matches manual affine map") {
  rgc::Rng rng(5);
  rgc::DenseLayer layer(3, 2, rgc::Activation::none, rng);
  const Tensor x = Tensor::from_vector({1, 3}, {1.0, -1.0, 2.0});
  const Tensor y = layer.forward(x);
  for (int64_t o = 0; o < 2; ++o) {
    double want = layer.bias.data()[static_cast<size_t>(o)];
    for (int64_t i = 0; i < 3; ++i) {
      want += x.data()[static_cast<size_t>(i)] *
              layer.weight.data()[static_cast<size_t>(i * 2 + o)];
    }
    CHECK(y.data()[static_cast<size_t>(o)] == doctest::Approx(want));
  }
  CHECK(layer.param_count() == 8);
}

TEST_CASE("conv2d identity and hand example") {
  // 1x1 unit kernel is the identity.
  const Tensor x = iota({1, 1, 3, 3});
  const Tensor k1 = Tensor::from_vector({1, 1, 1, 1}, {1.0});
  const Tensor b0 = Tensor::zeros({1});
  const Tensor same = rgc::conv2d(x, k1, b0, 1, 0);
  for (int64_t i = 0; i < 9; ++i) {
    CHECK(same.data()[static_cast<size_t>(i)] ==
          x.data()[static_cast<size_t>(i)]);
  }

  // 3x3 all-ones kernel with padding 1: center sums everything.
  const Tensor kones = Tensor::full({1, 1, 3, 3}, 1.0);
  const Tensor out = rgc::conv2d(x, kones, b0, 1, 1);
  CHECK(out.shape() == rgc::Shape{1, 1, 3, 3});
  CHECK(out.data()[4] == doctest::Approx(45.0));
  CHECK(out.data()[0] == doctest::Approx(1.0 + 2.0 + 4.0 + 5.0));
  CHECK(out.data()[8] == doctest::Approx(5.0 + 6.0 + 8.0 + 9.0));
}

TEST_CASE("conv2d stride 2 subsamples") {
  const Tensor x = iota({1, 1, 4, 4});
  const Tensor k = Tensor::from_vector({1, 1, 1, 1}, {1.0});
  const Tensor b = Tensor::zeros({1});
  const Tensor out = rgc::conv2d(x, k, b, 2, 0);
  CHECK(out.shape() == rgc::Shape{1, 1, 2, 2});
  CHECK(out.data()[0] == 1.0);
  CHECK(out.data()[1] == 3.0);
  CHECK(out.data()[2] == 9.0);
  CHECK(out.data()[3] == 11.0);
}

TEST_CASE("conv2d validates shapes") {
  const Tensor x = iota({1, 2, 4, 4});
  const Tensor k = Tensor::zeros({3, 1, 3, 3});
  const Tensor b = Tensor::zeros({3});
  CHECK_THROWS_AS(rgc::conv2d(x, k, b, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(
      rgc::conv2d(x, Tensor::zeros({1, 2, 6, 6}), Tensor::zeros({1}), 1, 0),
      std::invalid_argument);
}

TEST_CASE("conv2d finite differences, stride 1 and 2") {
  rgc::Rng rng(11);
  for (const int stride : {1, 2}) {
    Tensor x = random_param({2, 3, 6, 5}, rng);
    Tensor k = random_param({4, 3, 3, 3}, rng, -0.5, 0.5);
    Tensor b = random_param({4}, rng, -0.2, 0.2);
    Tensor probe = random_param({2, 4, stride == 1 ? 6 : 3,
                                 stride == 1 ? 5 : 3},
                                rng);
    probe.set_requires_grad(false);
    const auto res = testsupport::gradcheck(
        {x, k, b},
        [&] {
          return rgc::mean(rgc::mul(rgc::conv2d(x, k, b, stride, 1), probe));
        },
        rng);
    CHECK(res.max_rel < 1e-4);
  }
}

TEST_CASE("layer_norm_chw normalizes per sample") {
  rgc::Rng rng(13);
  Tensor x = random_param({2, 3, 4, 4}, rng, -2.0, 5.0);
  const Tensor gamma = Tensor::full({3}, 1.0);
  const Tensor beta = Tensor::zeros({3});
  const Tensor y = rgc::layer_norm_chw(x, gamma, beta);
  const int64_t per = 3 * 4 * 4;
  for (int64_t b = 0; b < 2; ++b) {
    double m = 0.0, v = 0.0;
    for (int64_t i = 0; i < per; ++i) {
      m += y.data()[static_cast<size_t>(b * per + i)];
    }
    m /= static_cast<double>(per);
    for (int64_t i = 0; i < per; ++i) {
      const double d = y.data()[static_cast<size_t>(b * per + i)] - m;
      v += d * d;
    }
    v /= static_cast<double>(per);
    CHECK(m == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(v == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("layer_norm_chw finite differences") {
  rgc::Rng rng(17);
  Tensor x = random_param({2, 2, 3, 3}, rng, -1.0, 2.0);
  Tensor gamma = random_param({2}, rng, 0.5, 1.5);
  Tensor beta = random_param({2}, rng, -0.3, 0.3);
  Tensor probe = random_param({2, 2, 3, 3}, rng);
  probe.set_requires_grad(false);
  const auto res = testsupport::gradcheck(
      {x, gamma, beta},
      [&] {
        return rgc::mean(
            rgc::mul(rgc::layer_norm_chw(x, gamma, beta), probe));
      },
      rng);
  CHECK(res.max_rel < 1e-4);
}

TEST_CASE("max_pool2x2 picks maxima and routes gradients") {
  Tensor x = Tensor::from_vector(
      {1, 1, 4, 4},
      {1, 2, 5, 4, 3, 8, 6, 7, 9, 10, 13, 12, 11, 14, 15, 16}, true);
  const Tensor y = rgc::max_pool2x2(x);
  CHECK(y.shape() == rgc::Shape{1, 1, 2, 2});
  CHECK(y.data()[0] == 8.0);
  CHECK(y.data()[1] == 7.0);
  CHECK(y.data()[2] == 14.0);
  CHECK(y.data()[3] == 16.0);
  rgc::backward(rgc::sum(y));
  // Exactly the four argmax cells get gradient 1.
  double total = 0.0;
  for (const double g : x.grad()) total += g;
  CHECK(total == 4.0);
  CHECK(x.grad()[5] == 1.0);   // 8
  CHECK(x.grad()[7] == 1.0);   // 7
  CHECK(x.grad()[13] == 1.0);  // 14
  CHECK(x.grad()[15] == 1.0);  // 16
}

TEST_CASE("max_pool2x2 floor semantics on odd sizes") {
  const Tensor x = iota({1, 1, 5, 5});
  const Tensor y = rgc::max_pool2x2(x);
  CHECK(y.shape() == rgc::Shape{1, 1, 2, 2});
  CHECK(y.data()[3] == 19.0);  // max of rows 2-3, cols 2-3
}

TEST_CASE("max_pool2x2 finite differences with distinct values") {
  rgc::Rng rng(19);
  std::vector<double> v(2 * 2 * 4 * 4);
  for (size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(i) * 0.37 + rng.uniform(0.0, 0.1);
  }
  Tensor x = Tensor::from_vector({2, 2, 4, 4}, std::move(v), true);
  Tensor probe = random_param({2, 2, 2, 2}, rng);
  probe.set_requires_grad(false);
  const auto res = testsupport::gradcheck(
      {x}, [&] { return rgc::sum(rgc::mul(rgc::max_pool2x2(x), probe)); },
      rng);
  CHECK(res.max_rel < 1e-4);
}

TEST_CASE("encoder output shape and parameter count") {
  rgc::Rng rng(23);
  rgc::EncoderConfig cfg;  // 40 frames, 50x50, [16,32,48,64], latent 32
  const rgc::Encoder enc(cfg, rng);
  CHECK(enc.param_count() == 126080);

  rgc::EncoderConfig small;
  small.frames = 4;
  small.height = 50;
  small.width = 50;
  small.latent = 8;
  const rgc::Encoder enc2(small, rng);
  const Tensor x = Tensor::zeros({3, 4, 50, 50});
  const Tensor z = enc2.forward(x);
  CHECK(z.shape() == rgc::Shape{3, 8});

  CHECK_THROWS_AS(enc2.forward(Tensor::zeros({3, 5, 50, 50})),
                  std::invalid_argument);
}

TEST_CASE("lstm zero-weight hand values") {
  rgc::Rng rng(29);
  rgc::LstmCell cell(2, 1, rng);
  for (Tensor* t : {&cell.wi, &cell.wf, &cell.wg, &cell.wo}) {
    auto w = t->mutable_data();
    std::fill(w.begin(), w.end(), 0.0);
  }
  const Tensor x = Tensor::from_vector({1, 2}, {0.3, -0.7});
  const Tensor h = Tensor::from_vector({1, 1}, {0.5});
  const Tensor c = Tensor::from_vector({1, 1}, {2.0});
  const auto [h2, c2] = cell.step(x, h, c);
  // All gates sigmoid(0)=0.5, g=tanh(0)=0: c' = 0.5*2 = 1, h' = 0.5*tanh(1).
  CHECK(c2.item() == doctest::Approx(1.0));
  CHECK(h2.item() == doctest::Approx(0.5 * std::tanh(1.0)));
}

TEST_CASE("lstm step finite differences") {
  rgc::Rng rng(31);
  rgc::LstmCell cell(3, 4, rng);
  Tensor x = random_param({2, 3}, rng);
  Tensor h = random_param({2, 4}, rng, -0.5, 0.5);
  Tensor c = random_param({2, 4}, rng, -0.5, 0.5);
  std::vector<Tensor> params = {x,       h,       c,       cell.wi, cell.wf,
                                cell.wg, cell.wo, cell.bi, cell.bf, cell.bg,
                                cell.bo};
  const auto res = testsupport::gradcheck(
      params,
      [&] {
        const auto [h2, c2] = cell.step(x, h, c);
        return rgc::sum(rgc::add(rgc::mul(h2, h2), rgc::mul(c2, c2)));
      },
      rng, 10);
  CHECK(res.max_rel < 1e-4);
}

TEST_CASE("lstm parameter count follows 4(L+H+1)H") {
  rgc::Rng rng(37);
  const rgc::LstmCell cell(32, 16, rng);
  CHECK(cell.param_count() == 4 * (32 + 16 + 1) * 16);
}
