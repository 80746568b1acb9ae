#include "pcqkit/colorspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pcqkit/error.hpp"

namespace pcqkit {
namespace {

double srgb_to_linear(double c) {
  c /= 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

// sRGB primaries, D65.
const Eigen::Matrix3d& rgb_to_xyz() {
  static const Eigen::Matrix3d m = [] {
    Eigen::Matrix3d r;
    r << 0.4124564, 0.3575761, 0.1804375,
         0.2126729, 0.7151522, 0.0721750,
         0.0193339, 0.1191920, 0.9503041;
    return r;
  }();
  return m;
}

// White point taken from the same matrix so gray maps to a = b = 0.
const Eigen::Vector3d& white_point() {
  static const Eigen::Vector3d w = rgb_to_xyz() * Eigen::Vector3d::Ones();
  return w;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

YCbCrCoefficients YCbCrCoefficients::by_name(const std::string& name) {
  if (name == "bt709") return bt709();
  if (name == "bt601") return bt601();
  throw Error(ErrorCode::BadConfig, "unknown YCbCr matrix '" + name + "' (expected bt709 or bt601)");
}

YCbCr rgb_to_ycbcr(const Rgb& rgb, const YCbCrCoefficients& k) {
  const double r = rgb[0];
  const double g = rgb[1];
  const double b = rgb[2];
  const double kg = 1.0 - k.kr - k.kb;
  // Written as differences so that R = G = B gives exact results.
  const double y = g + k.kr * (r - g) + k.kb * (b - g);
  const double b_minus_y = k.kr * (b - r) + kg * (b - g);
  const double r_minus_y = kg * (r - g) + k.kb * (r - b);
  const double cb = 128.0 + b_minus_y / (2.0 * (1.0 - k.kb));
  const double cr = 128.0 + r_minus_y / (2.0 * (1.0 - k.kr));
  return {std::clamp(y, 0.0, 255.0), std::clamp(cb, 0.0, 255.0), std::clamp(cr, 0.0, 255.0)};
}

std::string to_string(PerceptualMode mode) { return mode == PerceptualMode::CIELAB ? "cielab" : "lab2000hl"; }

PerceptualMode perceptual_mode_from_string(const std::string& name) {
  if (name == "cielab") return PerceptualMode::CIELAB;
  if (name == "lab2000hl") return PerceptualMode::LAB2000HL;
  throw Error(ErrorCode::BadConfig, "unknown color mode '" + name + "' (expected cielab or lab2000hl)");
}

Lab2000hlTable::Lab2000hlTable(int na, int nb, double a_min, double a_max, double b_min, double b_max,
                               std::vector<Eigen::Vector2d> samples)
    : na_(na), nb_(nb), a_min_(a_min), a_max_(a_max), b_min_(b_min), b_max_(b_max), samples_(std::move(samples)) {
  if (na_ < 2 || nb_ < 2 || !(a_max_ > a_min_) || !(b_max_ > b_min_) ||
      samples_.size() != static_cast<std::size_t>(na_) * static_cast<std::size_t>(nb_))
    throw Error(ErrorCode::TableMissing, "LAB2000HL table has an inconsistent grid");
}

Lab2000hlTable Lab2000hlTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::TableMissing, "cannot open LAB2000HL table " + path.string());
  std::string tag;
  int na = 0, nb = 0;
  double a0, a1, b0, b1;
  if (!(in >> tag >> na >> nb >> a0 >> a1 >> b0 >> b1) || tag != "lab2000hl")
    throw Error(ErrorCode::TableMissing, path.string() + ": bad LAB2000HL table header");
  std::vector<Eigen::Vector2d> samples(static_cast<std::size_t>(std::max(na, 0)) * std::max(nb, 0));
  for (auto& s : samples) {
    if (!(in >> s.x() >> s.y())) throw Error(ErrorCode::TableMissing, path.string() + ": truncated LAB2000HL table");
  }
  return Lab2000hlTable(na, nb, a0, a1, b0, b1, std::move(samples));
}

Eigen::Vector2d Lab2000hlTable::map(double a, double b) const {
  const double u = std::clamp((a - a_min_) / (a_max_ - a_min_), 0.0, 1.0) * (na_ - 1);
  const double v = std::clamp((b - b_min_) / (b_max_ - b_min_), 0.0, 1.0) * (nb_ - 1);
  const int i0 = std::min(static_cast<int>(u), na_ - 2);
  const int j0 = std::min(static_cast<int>(v), nb_ - 2);
  const double tu = u - i0;
  const double tv = v - j0;
  auto at = [&](int i, int j) -> const Eigen::Vector2d& { return samples_[static_cast<std::size_t>(i) * nb_ + j]; };
  return (1 - tu) * (1 - tv) * at(i0, j0) + tu * (1 - tv) * at(i0 + 1, j0) + (1 - tu) * tv * at(i0, j0 + 1) +
         tu * tv * at(i0 + 1, j0 + 1);
}

PerceptualColor rgb_to_perceptual(const Rgb& rgb, PerceptualMode mode, const Lab2000hlTable* table) {
  if (mode == PerceptualMode::LAB2000HL && table == nullptr)
    throw Error(ErrorCode::TableMissing, "LAB2000HL requested but no table was loaded");
  const Eigen::Vector3d lin(srgb_to_linear(rgb[0]), srgb_to_linear(rgb[1]), srgb_to_linear(rgb[2]));
  const Eigen::Vector3d xyz = rgb_to_xyz() * lin;
  const Eigen::Vector3d& w = white_point();
  const double fx = lab_f(xyz.x() / w.x());
  const double fy = lab_f(xyz.y() / w.y());
  const double fz = lab_f(xyz.z() / w.z());

  PerceptualColor out;
  out.L = 116.0 * fy - 16.0;
  out.a = 500.0 * (fx - fy);
  out.b = 200.0 * (fy - fz);
  if (mode == PerceptualMode::LAB2000HL) {
    const Eigen::Vector2d hl = table->map(out.a, out.b);
    out.a = hl.x();
    out.b = hl.y();
  }
  out.C = std::hypot(out.a, out.b);
  return out;
}

Eigen::Matrix3d default_gaussian_color_matrix() {
  Eigen::Matrix3d m;
  m << 0.06, 0.63, 0.27,
       0.30, 0.04, -0.35,
       0.34, -0.60, 0.17;
  return m;
}

GaussianColor rgb_to_gaussian(const Rgb& rgb, const Eigen::Matrix3d& m) {
  const Eigen::Vector3d v = m * Eigen::Vector3d(rgb[0], rgb[1], rgb[2]);
  return {v[0], v[1], v[2]};
}

}  // namespace pcqkit
