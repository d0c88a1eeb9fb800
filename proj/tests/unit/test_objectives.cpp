#include <doctest.h>

#include "ocvl/objectives.hpp"
#include "support/test_support.hpp"

using namespace ocvl;

TEST_CASE("mse_loss basics") {
  std::mt19937_64 rng(1);
  const Matrix a = testing::random_matrix(3, 4, rng);
  CHECK(mse_loss(a, a) == 0.0);
  Matrix b = a;
  for (double& x : b.values()) x += 1.0;
  CHECK(mse_loss(b, a) == doctest::Approx(1.0).epsilon(1e-15));
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix p = testing::random_matrix(3, 4, rng);
    const Matrix q = testing::random_matrix(3, 4, rng);
    CHECK(std::abs(mse_loss(p, q) - oracle::mse(testing::to_oracle(p), testing::to_oracle(q))) < 1e-12);
    CHECK(mse_loss(p, q) == mse_loss(q, p));
  }
  CHECK_THROWS_AS(mse_loss(Matrix(2, 3), Matrix(3, 2)), ShapeError);
}

TEST_CASE("rgb target scales bytes to [0, 1]") {
  VideoClip c = testing::tiny_clip(1, 2, 8, 4, 1);
  c.rgb[0] = 255;
  c.rgb[1] = 0;
  const Matrix t = prepare_target(c, TargetKind::rgb, 0);
  CHECK(t.rows() == 64);
  CHECK(t.cols() == 3);
  CHECK(t(0, 0) == 1.0);
  CHECK(t(0, 1) == 0.0);
}

TEST_CASE("flow target is divided by the split maximum") {
  VideoClip c = testing::tiny_clip(1, 1, 4, 4, 0);
  std::fill(c.flow->begin(), c.flow->end(), 0.0f);
  CHECK(prepare_target(c, TargetKind::flow, 0, 3.0) == Matrix(16, 2));
  (*c.flow)[2 * 5] = 2.0f;
  (*c.flow)[2 * 5 + 1] = -4.0f;
  (*c.flow)[2 * 7] = 1.0f;
  const double max_abs = flow_max_abs(std::span(&c, 1));
  CHECK(max_abs == 4.0);
  const Matrix t = prepare_target(c, TargetKind::flow, 0, max_abs);
  CHECK(t(5, 0) == 0.5);
  CHECK(t(5, 1) == -1.0);
  CHECK(t(7, 0) == 0.25);
}

TEST_CASE("flow normalization over a generated split") {
  std::vector<VideoClip> split;
  for (std::uint64_t s = 0; s < 4; ++s) split.push_back(testing::tiny_clip(s, 3, 16, 11, 4, Variant::e_like));
  double oracle_max = 0.0;
  for (const auto& v : split)
    for (float f : *v.flow) oracle_max = std::max(oracle_max, double(std::abs(f)));
  CHECK(flow_max_abs(split) == oracle_max);
  for (const auto& v : split) {
    const Matrix t = prepare_target(v, TargetKind::flow, 2, oracle_max);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t.data()[i] == double(v.frame_flow(2)[i]) / oracle_max);
      CHECK(std::abs(t.data()[i]) <= 1.0);
    }
  }
}

TEST_CASE("feature target is the stored grid without the global embedding") {
  VideoClip c = testing::tiny_clip(1, 2, 8, 4, 1);
  CHECK_THROWS_AS(prepare_target(c, TargetKind::features, 0), ConfigError);
  c.flow.reset();
  CHECK_THROWS_AS(prepare_target(c, TargetKind::flow, 0), ConfigError);
  FeatureBlock f{2, 2, 3, {}};
  for (int i = 0; i < 24; ++i) f.values.push_back(float(i));
  c.features = f;
  const Matrix t = prepare_target(c, TargetKind::features, 1);
  CHECK(t.rows() == 4);
  CHECK(t.cols() == 3);
  CHECK(t(0, 0) == 12.0);
  CHECK(t(3, 2) == 23.0);
}

TEST_CASE("mse gradient equals 2 (pred - target) / N") {
  std::mt19937_64 rng(2);
  const Matrix p = testing::random_matrix(5, 3, rng);
  const Matrix q = testing::random_matrix(5, 3, rng);
  Tape tape;
  Var v = tape.leaf(p);
  Var loss = mse_loss(v, q);
  CHECK(loss.value()(0, 0) == doctest::Approx(mse_loss(p, q)));
  tape.backward(loss);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(v.grad().data()[i] - 2.0 * (p.data()[i] - q.data()[i]) / 15.0) < 1e-10);
}
