#include <doctest.h>

#include "oracles.hpp"
#include "vidlm/assembly.hpp"

using namespace vidlm;

TEST_CASE("assembled rows are patches then cls tokens") {
  Rng rng(1);
  for (std::size_t frames : {1, 3, 7}) {
    const VideoFeatures video = oracle::random_video(frames, 4, rng);
    const AggregatedPatches agg = aggregate_v1(video);
    const VideoTokenSequence seq = assemble_video_tokens(agg, video);
    REQUIRE(seq.row_count() == static_cast<Index>(256 + frames));
    CHECK(seq.frames == frames);
    CHECK(seq.tokens.topRows(256) == agg.patches);
    for (std::size_t t = 0; t < frames; ++t) CHECK(seq.tokens.row(static_cast<Index>(256 + t)).transpose() == video.frames[t].cls);
  }
}

TEST_CASE("assembly dimension mismatch") {
  Rng rng(2);
  const VideoFeatures video = oracle::random_video(2, 4, rng);
  AggregatedPatches agg{Matrix::Zero(256, 5)};
  CHECK_THROWS_AS(assemble_video_tokens(agg, video), std::invalid_argument);
  agg.patches = Matrix::Zero(255, 4);
  CHECK_THROWS_AS(assemble_video_tokens(agg, video), std::invalid_argument);
}

TEST_CASE("projection is row-wise affine") {
  Rng rng(3);
  const VideoTokenSequence seq{oracle::random_matrix(259, 4, rng), 3};

  const ProjectionParams identity{Matrix::Identity(4, 4), Vector::Zero(4)};
  CHECK(project_tokens(seq, identity) == seq.tokens);

  const Vector b = Vector::LinSpaced(6, -1.0, 1.0);
  const Matrix bias_only = project_tokens(seq, {Matrix::Zero(4, 6), b});
  for (Index r = 0; r < bias_only.rows(); ++r) CHECK(bias_only.row(r).transpose() == b);

  const ProjectionParams random{oracle::random_matrix(4, 6, rng), b};
  const Matrix out = project_tokens(seq, random);
  CHECK(out.rows() == 259);
  CHECK((out - oracle::affine_loops(seq.tokens, random.weight, random.bias)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(project_tokens(seq, random) == out);

  CHECK_THROWS_AS(project_tokens(seq, {Matrix::Zero(5, 6), b}), std::invalid_argument);
  CHECK_THROWS_AS(project_tokens(seq, {Matrix::Zero(4, 6), Vector::Zero(5)}), std::invalid_argument);
}

TEST_CASE("projection gradients") {
  Rng rng(4);
  VideoTokenSequence seq{oracle::random_matrix(259, 4, rng), 3};
  ProjectionParams p{oracle::random_matrix(4, 6, rng), oracle::random_matrix(1, 6, rng).row(0).transpose()};
  const Matrix up = oracle::random_matrix(259, 6, rng);
  const ProjectionGradients g = projection_backward(seq, p, up);

  CHECK((g.params.bias - up.colwise().sum().transpose()).cwiseAbs().maxCoeff() < 1e-12);

  const auto loss = [&] { return oracle::frobenius_dot(up, project_tokens(seq, p)); };
  for (Index k = 0; k < p.weight.size(); ++k) {
    const double fd = oracle::central_difference(loss, p.weight.data()[k]);
    CHECK(oracle::rel_error(g.params.weight.data()[k], fd, 1e-4) < 1e-4);
  }

  for (Index r = 0; r < 259; ++r) {
    for (Index c = 0; c < 4; ++c) {
      double s = 0.0;
      for (Index j = 0; j < 6; ++j) s += up(r, j) * p.weight(c, j);
      CHECK(g.input(r, c) == doctest::Approx(s).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(projection_backward(seq, p, Matrix::Zero(258, 6)), std::invalid_argument);
}

TEST_CASE("projection initialization") {
  const ProjectionParams a = init_projection(8, 16, 3);
  const ProjectionParams b = init_projection(8, 16, 3);
  CHECK(a.weight == b.weight);
  CHECK(a.in_dim() == 8);
  CHECK(a.out_dim() == 16);
  CHECK(a.bias == Vector::Zero(16));
  CHECK(a.weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
}
