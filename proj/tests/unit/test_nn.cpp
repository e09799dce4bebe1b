#include <doctest.h>

#include "oracles.hpp"
#include "vidlm/nn.hpp"

using namespace vidlm;

namespace {

// Loss <upstream, layer(x)> and its finite-difference check over every
// parameter and input entry.
void check_layer_gradients(bool causal, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t dim = 4;
  const std::size_t len = 3;
  const std::size_t seqs = 2;
  nn::TransformerLayerParams p = nn::init_transformer_layer(dim, 4 * dim, 0.5, rng);
  std::vector<ParamView> views;
  p.collect("layer", views);
  for (auto& v : views)
    for (double& x : v.data) x += uniform(rng, -0.2, 0.2);

  Matrix x = oracle::random_matrix(static_cast<Index>(seqs * len), static_cast<Index>(dim), rng);
  const Matrix up = oracle::random_matrix(x.rows(), x.cols(), rng);
  const auto loss = [&] { return oracle::frobenius_dot(up, nn::transformer_layer_forward(p, x, len, causal, nullptr)); };

  nn::TransformerLayerCache cache;
  nn::transformer_layer_forward(p, x, len, causal, &cache);
  nn::TransformerLayerParams grads = nn::TransformerLayerParams::zeros(dim, 4 * dim);
  for (auto* n : {&grads.norm1, &grads.norm2}) n->gain.setZero();
  const Matrix dx = nn::transformer_layer_backward(p, cache, up, grads);

  std::vector<ConstParamView> gviews;
  std::as_const(grads).collect("layer", gviews);
  for (std::size_t v = 0; v < views.size(); ++v) {
    for (std::size_t i = 0; i < views[v].data.size(); ++i) {
      const double fd = oracle::central_difference(loss, views[v].data[i]);
      CHECK_MESSAGE(oracle::rel_error(gviews[v].data[i], fd, 1e-4) < 1e-4, views[v].name, " index ", i);
    }
  }
  for (Index i = 0; i < x.size(); ++i) {
    const double fd = oracle::central_difference(loss, x.data()[i]);
    CHECK(oracle::rel_error(dx.data()[i], fd, 1e-4) < 1e-4);
  }
}

}  // namespace

TEST_CASE("layer matches the scalar oracle") {
  Rng rng(5);
  for (bool causal : {false, true}) {
    nn::TransformerLayerParams p = nn::init_transformer_layer(4, 16, 0.5, rng);
    p.norm1.gain(1) = 1.7;
    p.norm2.shift(2) = -0.3;
    p.query.bias(0) = 0.2;
    const std::size_t len = 4;
    const Matrix x = oracle::random_matrix(2 * len, 4, rng);
    const Matrix y = nn::transformer_layer_forward(p, x, len, causal, nullptr);
    for (std::size_t s = 0; s < 2; ++s) {
      oracle::Seq seq;
      for (std::size_t t = 0; t < len; ++t) {
        const auto row = x.row(static_cast<Index>(s * len + t));
        seq.emplace_back(row.data(), row.data() + row.size());
      }
      const oracle::Seq expected = oracle::scalar_transformer_layer(p, seq, causal);
      for (std::size_t t = 0; t < len; ++t)
        for (Index d = 0; d < 4; ++d) CHECK(y(static_cast<Index>(s * len + t), d) == doctest::Approx(expected[t][d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("causal layer ignores later positions") {
  Rng rng(6);
  const nn::TransformerLayerParams p = nn::init_transformer_layer(4, 16, 0.5, rng);
  Matrix x = oracle::random_matrix(5, 4, rng);
  const Matrix before = nn::transformer_layer_forward(p, x, 5, true, nullptr);
  x.row(4).setRandom();
  x.row(3).setRandom();
  const Matrix after = nn::transformer_layer_forward(p, x, 5, true, nullptr);
  CHECK(before.topRows(3) == after.topRows(3));
  CHECK(before.row(3) != after.row(3));
}

TEST_CASE("transformer layer gradients") {
  check_layer_gradients(false, 21);
  check_layer_gradients(true, 22);
}

TEST_CASE("layer norm and linear helpers") {
  Rng rng(7);
  const Matrix x = oracle::random_matrix(3, 5, rng);
  const Matrix y = nn::layer_norm_forward(nn::LayerNormParams::identity(5), x, nullptr);
  for (Index r = 0; r < 3; ++r) {
    CHECK(y.row(r).mean() == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    CHECK((y.row(r).array().square().mean()) == doctest::Approx(1.0).epsilon(1e-4));
  }
  const nn::LinearParams lin{oracle::random_matrix(5, 2, rng), Vector::Ones(2)};
  const Matrix out = nn::linear_forward(lin, x);
  const Matrix expected = oracle::affine_loops(x, lin.weight, lin.bias);
  CHECK((out - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(nn::gelu(0.0) == 0.0);
  CHECK(nn::gelu(10.0) == doctest::Approx(10.0));
  CHECK_THROWS_AS(nn::transformer_layer_forward(nn::TransformerLayerParams::zeros(4, 16), x, 2, false, nullptr),
                  std::invalid_argument);
}

TEST_CASE("sinusoidal table") {
  const Matrix t = nn::sinusoidal_table(3, 4);
  CHECK(t(0, 0) == 0.0);
  CHECK(t(0, 1) == 1.0);
  CHECK(t(1, 0) == doctest::Approx(std::sin(1.0)));
  CHECK(t(2, 3) == doctest::Approx(std::cos(2.0 / 100.0)));
}
