#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "pcqkit/error.hpp"
#include "pcqkit/psnr.hpp"

using namespace pcqkit;
using doctest::Approx;
using pcqkit::testing::single_point;

namespace {

double brute_mse(const PointCloud& from, const PointCloud& to) {
  double sum = 0;
  for (const auto& p : from.positions) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to.positions) best = std::min(best, (p - q).squaredNorm());
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

TEST_CASE("d1 hand example") {
  const auto ref = single_point(Vec3(0, 0, 0));
  const auto dist = single_point(Vec3(3, 4, 2));
  const auto r = compute_d1(ref, dist, 1023.0);
  CHECK(r.mse_symmetric == 29.0);
  CHECK(r.psnr_db == Approx(10 * std::log10(3 * 1023.0 * 1023.0 / 29)).epsilon(1e-12));
  CHECK(r.psnr_db == Approx(50.34).epsilon(1e-4));
}

TEST_CASE("d1 identity and brute force") {
  Rng rng(21);
  for (int t = 0; t < 5; ++t) {
    const auto a = pcqkit::testing::random_cloud(300 + 40 * t, 200, rng);
    const auto b = pcqkit::testing::random_cloud(500 - 30 * t, 200, rng);
    const auto self = compute_d1(a, a, a.peak());
    CHECK(self.mse_symmetric == 0.0);
    CHECK(std::isinf(self.psnr_db));
    const auto r = compute_d1(a, b, a.peak());
    CHECK(r.mse_forward == Approx(brute_mse(b, a)).epsilon(1e-12));
    CHECK(r.mse_backward == Approx(brute_mse(a, b)).epsilon(1e-12));
    CHECK(r.mse_symmetric == std::max(r.mse_forward, r.mse_backward));
    const auto s = compute_d1(b, a, a.peak());
    CHECK(s.mse_symmetric == r.mse_symmetric);
  }
}

TEST_CASE("d2 hand example") {
  auto ref = single_point(Vec3(0, 0, 0));
  ref.normals = std::vector<Vec3>{Vec3(0, 0, 1)};
  auto dist = single_point(Vec3(3, 4, 2));
  dist.normals = std::vector<Vec3>{Vec3(0, 0, 1)};
  const auto r = compute_d2(ref, dist, 1023.0);
  CHECK(r.mse_forward == 4.0);
  CHECK(r.psnr_db == Approx(58.95).epsilon(1e-4));
}

TEST_CASE("d2 ignores tangential displacement") {
  PointCloud ref;
  for (int x = 0; x < 30; ++x)
    for (int y = 0; y < 30; ++y) ref.positions.emplace_back(100 + x, 100 + y, 50);
  ref.normals = std::vector<Vec3>(ref.size(), Vec3(0, 0, 1));
  PointCloud dist = ref;
  for (auto& p : dist.positions) p += Vec3(0.3, -0.2, 0);
  CHECK(compute_d1(ref, dist, 1023).mse_symmetric > 0);
  const auto r = compute_d2(ref, dist, 1023);
  CHECK(r.mse_symmetric == 0.0);
  CHECK(std::isinf(r.psnr_db));
}

TEST_CASE("d2 never below d1") {
  Rng rng(8);
  const auto ref = pcqkit::testing::sphere_cloud(3000, 80, rng);
  for (double sigma : {0.5, 2.0}) {
    const auto dist = pcqkit::testing::add_geometry_noise(ref, sigma, rng);
    const auto d1 = compute_d1(ref, dist, 1023);
    const auto d2 = compute_d2(ref, dist, 1023);
    CHECK(d2.psnr_db >= d1.psnr_db);
    CHECK(compute_d2(dist, ref, 1023).mse_symmetric == Approx(d2.mse_symmetric).epsilon(1e-12));
  }
}

TEST_CASE("d2 with too few points for normals") {
  PointCloud a;
  a.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  PointCloud b = a;
  CHECK_THROWS_AS(compute_d2(a, b, 1023), Error);
}

TEST_CASE("yuv hand example") {
  // Gray colors keep U = V = 128, so only Y differs.
  PointCloud ref;
  ref.positions = {Vec3(0, 0, 0), Vec3(10, 0, 0)};
  ref.colors = std::vector<Rgb>{{100, 100, 100}, {100, 100, 100}};
  PointCloud dist = ref;
  dist.colors = std::vector<Rgb>{{110, 110, 110}, {90, 90, 90}};
  const auto r = compute_yuv(ref, dist);
  CHECK(r.psnr_y.mse_symmetric == Approx(100).epsilon(1e-12));
  CHECK(r.psnr_y.psnr_db == Approx(28.13).epsilon(1e-4));
  CHECK(std::isinf(r.psnr_u.psnr_db));
  CHECK(std::isinf(r.psnr_v.psnr_db));
  CHECK(r.psnr_combined == Approx((6 * r.psnr_y.psnr_db + 200) / 8));
}

TEST_CASE("yuv identity and missing colors") {
  Rng rng(2);
  const auto a = pcqkit::testing::random_cloud(200, 50, rng);
  const auto r = compute_yuv(a, a);
  CHECK(std::isinf(r.psnr_y.psnr_db));
  CHECK(r.psnr_combined == 100.0);
  YuvOptions opts;
  opts.cap_db = 80;
  CHECK(compute_yuv(a, a, opts).psnr_combined == 80.0);

  PointCloud bare = a;
  bare.colors.reset();
  try {
    compute_yuv(a, bare);
    FAIL("expected MissingAttribute");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingAttribute);
  }
}

TEST_CASE("equal channel psnr gives the same combined value") {
  Rng rng(3);
  const auto a = pcqkit::testing::random_cloud(100, 30, rng);
  for (double cap : {40.0, 63.5, 100.0}) {
    YuvOptions opts;
    opts.cap_db = cap;
    CHECK(compute_yuv(a, a, opts).psnr_combined == cap);
  }
}

TEST_CASE("yuv symmetry modes") {
  Rng rng(13);
  const auto a = pcqkit::testing::random_cloud(150, 40, rng);
  const auto b = pcqkit::testing::random_cloud(170, 40, rng);
  YuvOptions worst;
  YuvOptions literal;
  literal.symmetry = YuvSymmetry::MaxPsnr;
  const auto w = compute_yuv(a, b, worst);
  const auto l = compute_yuv(a, b, literal);
  CHECK(w.psnr_y.psnr_db <= l.psnr_y.psnr_db);
  CHECK(compute_yuv(b, a, worst).psnr_y.mse_symmetric == Approx(w.psnr_y.mse_symmetric).epsilon(1e-12));
}

TEST_CASE("translation invariance") {
  Rng rng(6);
  const auto ref = pcqkit::testing::sphere_cloud(1500, 60, rng);
  const auto dist = pcqkit::testing::add_geometry_noise(ref, 1.0, rng);
  PointCloud ref_t = ref, dist_t = dist;
  const Vec3 shift(13, -7, 21);
  for (auto& p : ref_t.positions) p += shift;
  for (auto& p : dist_t.positions) p += shift;
  CHECK(compute_d1(ref_t, dist_t, 1023).psnr_db == Approx(compute_d1(ref, dist, 1023).psnr_db).epsilon(1e-9));
  CHECK(compute_d2(ref_t, dist_t, 1023).psnr_db == Approx(compute_d2(ref, dist, 1023).psnr_db).epsilon(1e-9));
  CHECK(compute_yuv(ref_t, dist_t).psnr_combined == Approx(compute_yuv(ref, dist).psnr_combined).epsilon(1e-9));
}

TEST_CASE("psnr from mse and capping") {
  CHECK(std::isinf(psnr_from_mse(0, 1023, 3)));
  CHECK(psnr_from_mse(255.0 * 255.0, 255, 1) == Approx(0.0));
  CHECK(capped(std::numeric_limits<double>::infinity(), 100) == 100);
  CHECK(capped(42, 100) == 42);
}
