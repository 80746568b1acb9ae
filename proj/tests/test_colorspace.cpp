#include <doctest.h>

#include "helpers.hpp"
#include "pcqkit/colorspace.hpp"
#include "pcqkit/error.hpp"

using namespace pcqkit;
using doctest::Approx;

TEST_CASE("ycbcr anchors") {
  auto g = rgb_to_ycbcr({128, 128, 128});
  CHECK(g.y == Approx(128).epsilon(1e-12));
  CHECK(g.cb == 128.0);
  CHECK(g.cr == 128.0);

  auto w = rgb_to_ycbcr({255, 255, 255});
  CHECK(w.y == Approx(255).epsilon(1e-12));
  CHECK(w.cb == 128.0);
  CHECK(w.cr == 128.0);

  auto r = rgb_to_ycbcr({255, 0, 0});
  CHECK(r.y == Approx(0.2126 * 255).epsilon(1e-12));
  // Cr = 128 + 0.5 (R - Y) / (1 - kr) = 255.5 before clamping.
  CHECK(r.cr == 255.0);
  CHECK(r.cb == Approx(128 + 0.5 * (0 - 0.2126 * 255) / (1 - 0.0722)).epsilon(1e-12));

  for (int v = 0; v < 256; v += 17) {
    const auto c = rgb_to_ycbcr({std::uint8_t(v), std::uint8_t(v), std::uint8_t(v)});
    CHECK(c.cb == 128.0);
    CHECK(c.cr == 128.0);
  }
}

TEST_CASE("ycbcr linearity") {
  Rng rng(1);
  const auto k = YCbCrCoefficients::bt709();
  for (int t = 0; t < 200; ++t) {
    // a + b stays in range so no clamping is involved.
    Rgb a{std::uint8_t(rng.below(128)), std::uint8_t(rng.below(128)), std::uint8_t(rng.below(128))};
    Rgb b{std::uint8_t(rng.below(128)), std::uint8_t(rng.below(128)), std::uint8_t(rng.below(128))};
    Rgb s{std::uint8_t(a[0] + b[0]), std::uint8_t(a[1] + b[1]), std::uint8_t(a[2] + b[2])};
    const auto ya = rgb_to_ycbcr(a, k), yb = rgb_to_ycbcr(b, k), ys = rgb_to_ycbcr(s, k);
    CHECK(ys.y == Approx(ya.y + yb.y).epsilon(1e-9));
    CHECK(ys.cb - 128 == Approx((ya.cb - 128) + (yb.cb - 128)).epsilon(1e-9));
    CHECK(ys.cr - 128 == Approx((ya.cr - 128) + (yb.cr - 128)).epsilon(1e-9));
  }
}

TEST_CASE("ycbcr variants by name") {
  CHECK(YCbCrCoefficients::by_name("bt601").kr == 0.299);
  CHECK(YCbCrCoefficients::by_name("bt709").kb == 0.0722);
  CHECK_THROWS_AS(YCbCrCoefficients::by_name("bt2020x"), Error);
}

TEST_CASE("cielab anchors") {
  const auto w = rgb_to_perceptual({255, 255, 255});
  CHECK(w.L == Approx(100.0).epsilon(1e-6));
  CHECK(std::abs(w.a) < 1e-9);
  CHECK(std::abs(w.b) < 1e-9);

  const auto k = rgb_to_perceptual({0, 0, 0});
  CHECK(k.L == 0.0);
  CHECK(k.a == 0.0);
  CHECK(k.b == 0.0);

  const auto g = rgb_to_perceptual({0, 255, 0});
  CHECK(g.L == Approx(87.7).epsilon(0.001));
  CHECK(g.a == Approx(-86.2).epsilon(0.002));
  CHECK(g.b == Approx(83.2).epsilon(0.002));
  CHECK(g.C == Approx(std::hypot(g.a, g.b)));
}

TEST_CASE("gray ramp is neutral and strictly increasing in L") {
  double last = -1;
  for (int v = 0; v < 256; ++v) {
    const auto c = rgb_to_perceptual({std::uint8_t(v), std::uint8_t(v), std::uint8_t(v)});
    CHECK(c.L > last);
    CHECK(std::abs(c.a) < 1e-9);
    CHECK(std::abs(c.b) < 1e-9);
    CHECK(c.C >= 0.0);
    last = c.L;
  }
}

TEST_CASE("lab2000hl mode needs a table") {
  CHECK_THROWS_AS(rgb_to_perceptual({1, 2, 3}, PerceptualMode::LAB2000HL, nullptr), Error);
  try {
    rgb_to_perceptual({1, 2, 3}, PerceptualMode::LAB2000HL, nullptr);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TableMissing);
  }
}

TEST_CASE("lab2000hl identity table reproduces cielab") {
  pcqkit::testing::TempDir dir;
  {
    std::ofstream f(dir / "id.txt");
    f << "lab2000hl 3 3 -128 128 -128 128\n";
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) f << (-128 + 128 * i) << ' ' << (-128 + 128 * j) << '\n';
  }
  const auto table = Lab2000hlTable::load(dir / "id.txt");
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const Rgb c = pcqkit::testing::random_color(rng);
    const auto lab = rgb_to_perceptual(c);
    const auto hl = rgb_to_perceptual(c, PerceptualMode::LAB2000HL, &table);
    CHECK(hl.L == lab.L);
    CHECK(hl.a == Approx(lab.a).epsilon(1e-9));
    CHECK(hl.b == Approx(lab.b).epsilon(1e-9));
  }
  CHECK_THROWS_AS(Lab2000hlTable::load(dir / "missing.txt"), Error);
}

TEST_CASE("gaussian color model") {
  const auto z = rgb_to_gaussian({0, 0, 0});
  CHECK(z.e == 0.0);
  CHECK(z.e_lambda == 0.0);
  CHECK(z.e_lambdalambda == 0.0);

  const auto m = default_gaussian_color_matrix();
  CHECK(m.row(0).sum() == Approx(0.96));
  CHECK(m.row(1).sum() == Approx(-0.01));
  CHECK(m.row(2).sum() == Approx(-0.09));
  const auto w = rgb_to_gaussian({255, 255, 255});
  CHECK(w.e == Approx(244.8));
  CHECK(w.e_lambda == Approx(-2.55));
  CHECK(w.e_lambdalambda == Approx(-22.95));

  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    Rgb a{std::uint8_t(rng.below(128)), std::uint8_t(rng.below(128)), std::uint8_t(rng.below(128))};
    Rgb a2{std::uint8_t(2 * a[0]), std::uint8_t(2 * a[1]), std::uint8_t(2 * a[2])};
    const auto g = rgb_to_gaussian(a), g2 = rgb_to_gaussian(a2);
    for (int ch = 0; ch < 3; ++ch) CHECK(g2[ch] == Approx(2 * g[ch]).epsilon(1e-12));
  }
}
