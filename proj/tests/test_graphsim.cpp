#include <doctest.h>

#include <numbers>

#include "helpers.hpp"
#include "pcqkit/error.hpp"
#include "pcqkit/graphsim.hpp"

using namespace pcqkit;
using doctest::Approx;

namespace {

LocalGraph line_graph(std::size_t n) {
  LocalGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    g.members.push_back(i);
    g.positions.emplace_back(static_cast<double>(i), 0, 0);
    g.signal.push_back(rgb_to_gaussian({50, 60, 70}));
  }
  return g;
}

}  // namespace

TEST_CASE("keypoint counts") {
  Rng rng(1);
  const auto c = pcqkit::testing::random_cloud(1000, 50, rng);
  CHECK(extract_keypoints(c, 0.1).indices.size() == 100);
  CHECK(extract_keypoints(c, 1.0).indices.size() == 1000);
  const auto ks = extract_keypoints(c, 0.05);
  CHECK(ks.indices.size() == 50);
  for (std::size_t i = 1; i < ks.responses.size(); ++i) CHECK(ks.responses[i - 1] >= ks.responses[i]);
  CHECK_THROWS_AS(extract_keypoints(c, 0.0), Error);
  CHECK_THROWS_AS(extract_keypoints(PointCloud{}, 0.1), Error);
}

TEST_CASE("displaced lattice point has the largest response") {
  // A closed ring is a 1-D lattice without end effects.
  PointCloud c;
  const int n = 60;
  const double R = 100;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    const double r = i == 17 ? R + 3.0 : R;
    c.positions.emplace_back(512 + r * std::cos(t), 512 + r * std::sin(t), 512);
  }
  const auto ks = extract_keypoints(c, 1.0, 2);
  CHECK(ks.indices[0] == 17);
  CHECK(ks.responses[0] > ks.responses[1]);
}

TEST_CASE("gradient features hand values") {
  const std::vector<double> w{0.25}, d{8};
  const auto f = gradient_features(w, d);
  CHECK(f.gradients[0] == 4.0);
  CHECK(f.mass == 4.0);
  CHECK(f.mean == 4.0);
  CHECK(f.variance == 0.0);

  const std::vector<double> w2{0.5, 0.5}, d2{3, -3};
  const auto f2 = gradient_features(w2, d2);
  CHECK(f2.mass == 0.0);
  CHECK(f2.variance > 0.0);
}

TEST_CASE("constant color graph has zero gradients") {
  const auto g = line_graph(9);
  for (bool smooth : {false, true})
    for (int ch = 0; ch < 3; ++ch) {
      const auto f = graph_gradient_features(g, ch, smooth);
      CHECK(f.mass == 0.0);
      CHECK(f.mean == 0.0);
      CHECK(f.variance == 0.0);
    }
  CHECK(graph_gradient_features(line_graph(1), 0, true).empty());
}

TEST_CASE("local graph features and isolated centres") {
  PointCloud c;
  c.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(50, 0, 0)};
  c.colors = std::vector<Rgb>{{10, 10, 10}, {30, 30, 30}, {0, 0, 0}};
  const auto f = local_graph_features(c, Vec3(0, 0, 0), 2.0, 0, false);
  // sigma = 1, w = exp(-1), difference 0.96 * 20 on the luminance channel.
  CHECK(f.mass == Approx(std::sqrt(std::exp(-1.0)) * 0.96 * 20).epsilon(1e-12));
  try {
    local_graph_features(c, Vec3(50, 0, 0), 2.0, 0);
    FAIL("expected EmptyNeighborhood");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyNeighborhood);
  }
}

TEST_CASE("scale transform") {
  BoundingBox box{Vec3(0, 0, 0), Vec3(10, 10, 10)};
  auto g = line_graph(8);
  const auto s0 = scale_transform(g, 0, box);
  CHECK(s0.members == g.members);
  CHECK(s0.positions == g.positions);
  const auto s1 = scale_transform(g, 1, box);
  CHECK(s1.members == std::vector<std::size_t>{0, 2, 4, 6});
  const Vec3 c = box.centroid();
  CHECK(s1.positions[1].isApprox(c + (g.positions[2] - c) / 2));
  const auto s2 = scale_transform(g, 2, box);
  CHECK(s2.members == std::vector<std::size_t>{0, 4});
  CHECK(s2.positions[1].isApprox(c + (g.positions[4] - c) / 4));
  CHECK_THROWS_AS(scale_transform(g, 3, box), Error);
}

TEST_CASE("similarity and pooling hand values") {
  CHECK(similarity(2, 4, 0.001) == Approx(16.001 / 20.001).epsilon(1e-15));
  CHECK(similarity(2, 4, 0.001) == Approx(0.800).epsilon(1e-3));
  CHECK(similarity(3.5, 3.5, 0.001) == 1.0);
  const std::vector<double> scores{1.0, 0.8, 0.6}, w{1, 1, 1};
  CHECK(pool_scales(scores, w) == Approx(0.8).epsilon(1e-15));
  const std::vector<double> w2{2, 1, 1};
  CHECK(pool_scales(scores, w2) == Approx(3.4 / 4).epsilon(1e-15));
}

TEST_CASE("identity scores one everywhere") {
  Rng rng(5);
  const auto c = pcqkit::testing::sphere_cloud(3000, 60, rng);
  const auto s = msgraphsim_score(c, c);
  CHECK(s.overall == 1.0);
  CHECK(s.graphsim == 1.0);
  REQUIRE(s.scales.size() == 3);
  for (const auto& sc : s.scales) {
    CHECK(sc.mg == 1.0);
    CHECK(sc.ug == 1.0);
    CHECK(sc.cg == 1.0);
    CHECK(sc.score == 1.0);
  }
  CHECK(s.keypoints == 300);
}

TEST_CASE("deterministic and sensitive to color noise") {
  Rng rng(8);
  const auto ref = pcqkit::testing::sphere_cloud(2500, 50, rng);
  const auto a = msgraphsim_score(ref, ref);
  double last = a.scales[0].mg;
  for (double amp : {5.0, 20.0, 60.0}) {
    double total = 0;
    for (int seed = 0; seed < 5; ++seed) {
      Rng noise(1000 + seed);
      PointCloud dist = ref;
      for (auto& col : *dist.colors)
        for (auto& ch : col) ch = static_cast<std::uint8_t>(std::clamp(std::lround(ch + amp * noise.normal()), 0L, 255L));
      const auto s1 = msgraphsim_score(ref, dist);
      const auto s2 = msgraphsim_score(ref, dist);
      CHECK(s1.overall == s2.overall);
      total += s1.scales[0].mg;
    }
    CHECK(total / 5 < last);
    last = total / 5;
  }
}

TEST_CASE("graphsim errors") {
  Rng rng(2);
  auto c = pcqkit::testing::random_cloud(100, 10, rng);
  PointCloud bare = c;
  bare.colors.reset();
  CHECK_THROWS_AS(msgraphsim_score(c, bare), Error);
  GraphSimOptions tiny;
  tiny.radius = 1e-6;
  try {
    msgraphsim_score(c, c, tiny);
    FAIL("expected AllKeypointsEmpty");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllKeypointsEmpty);
  }
}
