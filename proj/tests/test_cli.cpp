#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "pcqkit/cli.hpp"
#include "pcqkit/features.hpp"
#include "pcqkit/ply.hpp"

using namespace pcqkit;
using pcqkit::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// 12 groups of 3 rows; MOS is a noisy linear function of a few columns.
void write_synthetic_features(const std::filesystem::path& path, const std::string& hash) {
  Rng rng(5);
  FeatureTable t;
  t.columns = column_names();
  t.meta["config_hash"] = hash;
  for (int g = 0; g < 12; ++g) {
    for (int r = 0; r < 3; ++r) {
      FeatureTable::Row row;
      row.group_id = "g" + std::to_string(g);
      row.ref = "ref" + std::to_string(g) + ".ply";
      row.dist = "d" + std::to_string(g) + "_" + std::to_string(r) + ".ply";
      for (std::size_t c = 0; c < t.columns.size(); ++c) row.values.push_back(rng.uniform());
      row.mos = 1.0 + 2.0 * row.values[0] + 1.5 * row.values[6] + 0.05 * rng.normal();
      t.rows.push_back(row);
    }
  }
  write_feature_csv(t, path);
}

}  // namespace

TEST_CASE("metric identity through the command line") {
  TempDir dir;
  Rng rng(1);
  save_ply(pcqkit::testing::sphere_cloud(800, 40, rng), dir / "a.ply", false);
  const auto a = (dir / "a.ply").string();
  const auto r = cli({"metric", "--ref", a, "--dist", a, "--metric", "all", "--set", "pcqm.radius=6"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["d1"]["psnr_db"].get<double>() == 100.0);
  CHECK(j["d1"]["capped"].get<bool>());
  CHECK(j["d2"]["mse_symmetric"].get<double>() == 0.0);
  CHECK(j["pointssim"]["geometry"].get<double>() == 0.0);
  CHECK(j["pointssim"]["luminance"].get<double>() == 0.0);
  CHECK(j["pcqm"]["aggregate"].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(j["msgraphsim"]["overall"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(j["config_hash"].get<std::string>().empty());
}

TEST_CASE("train fsm then predict scores every row") {
  TempDir dir;
  write_synthetic_features(dir / "f.csv", "abc");
  const auto f = (dir / "f.csv").string();
  const auto m = (dir / "m.json").string();
  const auto s = (dir / "s.csv").string();
  auto r = cli({"train", "--features", f, "--model", "fsm", "--out", m});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = cli({"predict", "--model", m, "--features", f, "--out", s});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto scores = read_feature_csv(s);
  CHECK(scores.size() == 36);
  CHECK(scores.columns.size() == 1);
  for (const auto& row : scores.rows) CHECK(std::isfinite(row.values[0]));
}

TEST_CASE("predict refuses features from another extraction config") {
  TempDir dir;
  write_synthetic_features(dir / "train.csv", "abc");
  write_synthetic_features(dir / "other.csv", "xyz");
  const auto m = (dir / "m.json").string();
  REQUIRE(cli({"train", "--features", (dir / "train.csv").string(), "--model", "fsm", "--out", m}).code == 0);
  const auto bad = cli({"predict", "--model", m, "--features", (dir / "other.csv").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("ConfigHashMismatch") != std::string::npos);
  const auto forced = cli({"predict", "--model", m, "--features", (dir / "other.csv").string(), "--force"});
  CHECK(forced.code == 0);
}

TEST_CASE("crossval is reproducible for a fixed seed") {
  TempDir dir;
  write_synthetic_features(dir / "f.csv", "abc");
  const auto f = (dir / "f.csv").string();
  const auto a = cli({"crossval", "--features", f, "--model", "model1", "--folds", "4", "--seed", "7"});
  const auto b = cli({"crossval", "--features", f, "--model", "model1", "--folds", "4", "--seed", "7"});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  CHECK(a.out == b.out);
  CHECK(a.err == b.err);
}

TEST_CASE("rfe and evaluate run on a feature csv") {
  TempDir dir;
  write_synthetic_features(dir / "f.csv", "abc");
  const auto f = (dir / "f.csv").string();
  const auto r = cli({"rfe", "--features", f, "--estimator", "ridge", "--seed", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["ranking"].size() == kColumnCount);

  const auto table = read_feature_csv(f);
  std::string manifest = "group_id,ref,dist,mos\n";
  for (const auto& row : table.rows)
    manifest += row.group_id + "," + row.ref + "," + row.dist + "," + format_double(row.mos) + "\n";
  std::ofstream(dir / "m.csv") << manifest;
  const auto e = cli({"evaluate", "--scores", f, "--manifest", (dir / "m.csv").string(), "--metric", "psnr_d2"});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  CHECK(nlohmann::json::parse(e.out).dump().find("psnr_d2") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(cli({}).code == 1);
  CHECK(cli({"bogus"}).code == 1);
  CHECK(cli({"metric", "--ref", "x.ply"}).code == 1);
  CHECK(cli({"train", "--features", "f.csv", "--model", "model99"}).code == 2);  // file read fails first
  write_synthetic_features(dir / "f.csv", "abc");
  CHECK(cli({"train", "--features", (dir / "f.csv").string(), "--model", "model99"}).code == 1);
  CHECK(cli({"metric", "--ref", (dir / "missing.ply").string(), "--dist", (dir / "missing.ply").string()}).code == 2);
  std::ofstream(dir / "broken.ply") << "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nend_header\n1\n";
  const auto r = cli({"info", "--ref", (dir / "broken.ply").string()});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK(cli({"metric", "--set", "nokey", "--ref", "a", "--dist", "b"}).code == 1);
}

TEST_CASE("--out writes the same bytes as stdout") {
  TempDir dir;
  Rng rng(2);
  save_ply(pcqkit::testing::sphere_cloud(300, 30, rng), dir / "a.ply", true);
  const auto a = (dir / "a.ply").string();
  const auto r1 = cli({"info", "--ref", a});
  const auto r2 = cli({"info", "--ref", a, "--out", (dir / "info.json").string()});
  REQUIRE(r1.code == 0);
  REQUIRE(r2.code == 0);
  CHECK(r2.out.empty());
  CHECK(slurp(dir / "info.json") == r1.out);
}
