#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pcqkit/cli.hpp"
#include "pcqkit/config.hpp"
#include "pcqkit/error.hpp"
#include "pcqkit/evaluation.hpp"
#include "pcqkit/features.hpp"
#include "pcqkit/fusion.hpp"
#include "pcqkit/ply.hpp"
#include "pcqkit/regression.hpp"

namespace py = pybind11;

namespace {

pcqkit::Config make_config(const std::map<std::string, std::string>& settings) {
  auto c = pcqkit::Config::defaults();
  for (const auto& [k, v] : settings) c.set(k, v);
  return c;
}

py::dict cloud_to_dict(const pcqkit::PointCloud& cloud) {
  const auto n = static_cast<py::ssize_t>(cloud.size());
  py::array_t<double> pos({n, py::ssize_t{3}});
  auto p = pos.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i)
    for (py::ssize_t j = 0; j < 3; ++j) p(i, j) = cloud.positions[i][j];
  py::dict d;
  d["positions"] = pos;
  d["bit_depth"] = cloud.bit_depth;
  if (cloud.colors) {
    py::array_t<std::uint8_t> col({n, py::ssize_t{3}});
    auto c = col.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i) {
      for (py::ssize_t j = 0; j < 3; ++j) c(i, j) = (*cloud.colors)[i][j];
    }
    d["colors"] = col;
  } else {
    d["colors"] = py::none();
  }
  return d;
}

std::map<std::string, double> metrics_to_dict(const pcqkit::PairMetrics& m, const pcqkit::MetricConfig& mc) {
  std::map<std::string, double> out;
  if (m.d1) out["psnr_d1"] = pcqkit::capped(m.d1->psnr_db, mc.cap_db);
  if (m.d2) out["psnr_d2"] = pcqkit::capped(m.d2->psnr_db, mc.cap_db);
  if (m.yuv) {
    out["psnr_y"] = pcqkit::capped(m.yuv->psnr_y.psnr_db, mc.cap_db);
    out["psnr_u"] = pcqkit::capped(m.yuv->psnr_u.psnr_db, mc.cap_db);
    out["psnr_v"] = pcqkit::capped(m.yuv->psnr_v.psnr_db, mc.cap_db);
    out["psnr_yuv"] = m.yuv->psnr_combined;
  }
  if (m.pointssim_geo) {
    out["pointssim_geo"] = m.pointssim_geo->score;
    out["pointssim_lum"] = m.pointssim_lum->score;
  }
  if (m.pcqm) {
    for (int k = 0; k < 8; ++k) out["pcqm_f" + std::to_string(k + 1)] = m.pcqm->f[k];
    out["pcqm_rec"] = *m.pcqm_aggregate;
  }
  if (m.graphsim) {
    const char* comp[] = {"mg", "ug", "cg"};
    for (std::size_t s = 0; s < m.graphsim->scales.size(); ++s) {
      const auto& sc = m.graphsim->scales[s];
      const double v[] = {sc.mg, sc.ug, sc.cg};
      for (int c = 0; c < 3; ++c) out["msgsim_" + std::string(comp[c]) + "_s" + std::to_string(s)] = v[c];
    }
    out["msgsim_overall"] = m.graphsim->overall;
    out["graphsim"] = m.graphsim->graphsim;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_pcqkit, m) {
  m.doc() = "Full-reference point cloud quality metrics and feature-fusion models";

  py::register_exception<pcqkit::Error>(m, "PcqkitError");

  m.def(
      "load_ply",
      [](const std::filesystem::path& path, std::optional<int> bit_depth) {
        return cloud_to_dict(pcqkit::load_ply(path, bit_depth));
      },
      py::arg("path"), py::arg("bit_depth") = py::none());

  m.def(
      "metrics",
      [](const std::filesystem::path& ref, const std::filesystem::path& dist, const std::string& which,
         const std::map<std::string, std::string>& settings) {
        const auto mc = pcqkit::MetricConfig::from_config(make_config(settings));
        const auto r = pcqkit::load_ply(ref, mc.bit_depth);
        const auto d = pcqkit::load_ply(dist, mc.bit_depth);
        py::gil_scoped_release release;
        return metrics_to_dict(pcqkit::compute_pair(r, d, mc, pcqkit::MetricSelection::parse(which)), mc);
      },
      py::arg("ref"), py::arg("dist"), py::arg("metric") = "all",
      py::arg("settings") = std::map<std::string, std::string>{});

  m.def("feature_names", [] { return pcqkit::column_names(); });
  m.def("registry_names", &pcqkit::registry_names);

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = pcqkit::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI subcommand; returns (exit_code, stdout, stderr).");
}
