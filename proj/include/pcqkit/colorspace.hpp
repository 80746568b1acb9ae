#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pcqkit/point_cloud.hpp"

namespace pcqkit {

struct YCbCr {
  double y = 0.0;
  double cb = 0.0;
  double cr = 0.0;
};

/// Luma weights of a YCbCr variant; kg = 1 - kr - kb.
struct YCbCrCoefficients {
  double kr = 0.2126;
  double kb = 0.0722;

  static YCbCrCoefficients bt709() { return {0.2126, 0.0722}; }
  static YCbCrCoefficients bt601() { return {0.299, 0.114}; }
  static YCbCrCoefficients by_name(const std::string& name);
};

/// Full-range transform with a 128 chroma offset, clamped to [0, 255].
/// Gray inputs map to cb = cr = 128 exactly.
YCbCr rgb_to_ycbcr(const Rgb& rgb, const YCbCrCoefficients& k = {});

enum class PerceptualMode { CIELAB, LAB2000HL };

std::string to_string(PerceptualMode mode);
PerceptualMode perceptual_mode_from_string(const std::string& name);

struct PerceptualColor {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
  double C = 0.0;  // sqrt(a^2 + b^2)
};

/// Regular (a, b) grid mapped to hue-linearized (a_hl, b_hl), sampled with
/// bilinear interpolation and clamped at the grid border.
///
/// Text file layout:
///   lab2000hl <na> <nb> <a_min> <a_max> <b_min> <b_max>
///   followed by na*nb lines "<a_hl> <b_hl>", a varying slowest.
class Lab2000hlTable {
 public:
  static Lab2000hlTable load(const std::filesystem::path& path);
  Lab2000hlTable(int na, int nb, double a_min, double a_max, double b_min, double b_max,
                 std::vector<Eigen::Vector2d> samples);

  Eigen::Vector2d map(double a, double b) const;

 private:
  int na_;
  int nb_;
  double a_min_, a_max_, b_min_, b_max_;
  std::vector<Eigen::Vector2d> samples_;
};

/// sRGB (D65) -> CIELAB; in LAB2000HL mode the chromatic pair is remapped
/// through `table`, which must then be non-null (TableMissing otherwise).
PerceptualColor rgb_to_perceptual(const Rgb& rgb, PerceptualMode mode = PerceptualMode::CIELAB,
                                  const Lab2000hlTable* table = nullptr);

struct GaussianColor {
  double e = 0.0;
  double e_lambda = 0.0;
  double e_lambdalambda = 0.0;

  double operator[](int channel) const { return channel == 0 ? e : (channel == 1 ? e_lambda : e_lambdalambda); }
};

/// RGB -> Gaussian color model (E, E_lambda, E_lambdalambda).
Eigen::Matrix3d default_gaussian_color_matrix();
GaussianColor rgb_to_gaussian(const Rgb& rgb, const Eigen::Matrix3d& m = default_gaussian_color_matrix());

}  // namespace pcqkit
