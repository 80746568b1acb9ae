#include <doctest.h>

#include "helpers.hpp"
#include "pcqkit/error.hpp"
#include "pcqkit/features.hpp"
#include "pcqkit/ply.hpp"

using namespace pcqkit;
using pcqkit::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p);
  f << s;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::InvalidArgument;
}

// Two references, each with the pristine copy and one noisy version.
DatasetManifest make_corpus(const TempDir& dir) {
  Rng rng(99);
  std::string csv = "group_id,ref,dist,mos\n";
  for (int g = 0; g < 2; ++g) {
    const auto ref = pcqkit::testing::sphere_cloud(1200, 50 + 10 * g, rng);
    const std::string rname = "ref" + std::to_string(g) + ".ply";
    save_ply(ref, dir / rname, true);
    const auto noisy = pcqkit::testing::add_geometry_noise(ref, 1.5, rng);
    const std::string dname = "dist" + std::to_string(g) + ".ply";
    save_ply(noisy, dir / dname, true);
    csv += "g" + std::to_string(g) + "," + rname + "," + rname + ",5\n";
    csv += "g" + std::to_string(g) + "," + rname + "," + dname + ",3.5\n";
  }
  write_text(dir / "manifest.csv", csv);
  return load_manifest(dir / "manifest.csv", true);
}

}  // namespace

TEST_CASE("manifest loading") {
  TempDir dir;
  write_text(dir / "m.csv", "Group_ID,ref,dist,MOS,mos_std,codec\na,r1.ply,d1.ply,4.5,0.3,gpcc\na,r1.ply,d2.ply,3,,vpcc\nb,r2.ply,d3.ply,1.25,0.5,\n");
  const auto m = load_manifest(dir / "m.csv");
  CHECK(m.rows.size() == 3);
  CHECK(m.group_count() == 2);
  CHECK(m.rows[1].mos == 3.0);
  CHECK_FALSE(m.rows[1].mos_std.has_value());
  CHECK(*m.rows[0].mos_std == 0.3);
  CHECK(m.rows[0].codec == "gpcc");
  CHECK(m.rows[0].ref_path == dir / "r1.ply");
  CHECK(m.rows[0].ref == "r1.ply");

  write_text(dir / "nogroup.csv", "ref,dist,mos\nx.ply,y.ply,1\nx.ply,z.ply,2\nw.ply,v.ply,3\n");
  const auto ng = load_manifest(dir / "nogroup.csv");
  CHECK(ng.group_count() == 2);
  CHECK(ng.rows[0].group_id == "x.ply");

  save_manifest(m, dir / "copy.csv");
  const auto back = load_manifest(dir / "copy.csv");
  REQUIRE(back.rows.size() == 3);
  CHECK(back.rows[2].mos == 1.25);
  CHECK(back.rows[0].group_id == "a");
}

TEST_CASE("manifest errors") {
  TempDir dir;
  write_text(dir / "nomos.csv", "group_id,ref,dist\na,r,d\n");
  CHECK(code_of([&] { load_manifest(dir / "nomos.csv"); }) == ErrorCode::MissingColumn);
  write_text(dir / "badmos.csv", "group_id,ref,dist,mos\na,r,d,4\na,r,e,good\n");
  try {
    load_manifest(dir / "badmos.csv");
    FAIL("expected BadMosValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadMosValue);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  write_text(dir / "split.csv", "group_id,ref,dist,mos\na,r,d,4\nb,r,e,3\n");
  CHECK(code_of([&] { load_manifest(dir / "split.csv"); }) == ErrorCode::InvalidArgument);
  write_text(dir / "strict.csv", "ref,dist,mos\nnothere.ply,alsonot.ply,1\n");
  CHECK_NOTHROW(load_manifest(dir / "strict.csv"));
  CHECK(code_of([&] { load_manifest(dir / "strict.csv", true); }) == ErrorCode::IoFailure);
}

TEST_CASE("feature names") {
  CHECK(kFeatureNames.size() == 23);
  CHECK(kFeatureNames[0] == "psnr_d2");
  CHECK(kFeatureNames[6] == "pcqm_f1");
  CHECK(kFeatureNames[14] == "msgsim_mg_s0");
  CHECK(kFeatureNames[22] == "msgsim_cg_s2");
  CHECK(feature_index("pcqm_f4") == 9);
  CHECK(code_of([&] { feature_index("pcqm_f9"); }) == ErrorCode::UnknownFeatureName);
  const auto cols = column_names();
  CHECK(cols.size() == kColumnCount);
  CHECK(cols[23] == "psnr_d1");
  CHECK(cols.back() == "graphsim");
}

TEST_CASE("metric selection parsing") {
  const auto s = MetricSelection::parse("d1,pcqm");
  CHECK(s.d1);
  CHECK(s.pcqm);
  CHECK_FALSE(s.d2);
  CHECK_FALSE(s.graphsim);
  CHECK(MetricSelection::parse("all").graphsim);
  CHECK(code_of([&] { MetricSelection::parse("d3"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("identity features and warm cache") {
  TempDir dir;
  const auto manifest = make_corpus(dir);
  const Config config = Config::defaults();
  ExtractionStats cold;
  const auto table = extract_features(manifest, config, dir / "cache", 2, &cold);
  CHECK(cold.computed == 4);
  CHECK(cold.cache_hits == 0);
  REQUIRE(table.size() == 4);
  CHECK(table.groups() == std::vector<std::string>{"g0", "g0", "g1", "g1"});

  for (std::size_t r : {0u, 2u}) {
    const auto& v = table.rows[r].values;
    CHECK(v[table.column("psnr_d2")] == 100.0);
    CHECK(v[table.column("psnr_y")] == 100.0);
    CHECK(v[table.column("psnr_d1")] == 100.0);
    CHECK(v[table.column("psnr_yuv")] == 100.0);
    CHECK(v[table.column("pointssim_geo")] == 0.0);
    CHECK(v[table.column("pointssim_lum")] == 0.0);
    for (int i = 1; i <= 3; ++i) CHECK(v[table.column("pcqm_f" + std::to_string(i))] == 0.0);
    for (int i = 4; i <= 8; ++i) CHECK(v[table.column("pcqm_f" + std::to_string(i))] == 1.0);
    CHECK(v[table.column("pcqm_rec")] == 0.0);
    for (std::size_t c = 14; c < 23; ++c) CHECK(v[c] == 1.0);
    CHECK(v[table.column("graphsim")] == 1.0);
  }
  const auto& noisy = table.rows[1].values;
  CHECK(noisy[table.column("psnr_d2")] < 100.0);
  CHECK(noisy[table.column("pointssim_geo")] > 0.0);

  const std::string cold_csv = format_feature_csv(table);
  ExtractionStats warm;
  const auto again = extract_features(manifest, config, dir / "cache", 1, &warm);
  CHECK(warm.computed == 0);
  CHECK(warm.cache_hits == 4);
  CHECK(format_feature_csv(again) == cold_csv);

  const auto uncached = extract_features(manifest, config, std::nullopt, 1);
  CHECK(format_feature_csv(uncached) == cold_csv);

  Config changed = config;
  changed.set("pointssim.k_neighbors", "8");
  ExtractionStats other;
  extract_features(manifest, changed, dir / "cache", 1, &other);
  CHECK(other.computed == 4);
}

TEST_CASE("feature csv round trip and schema checks") {
  TempDir dir;
  FeatureTable t;
  t.meta["config_hash"] = "abc";
  t.columns = {"x", "y"};
  t.rows.push_back({"g", "r.ply", "d.ply", 2.5, {0.1, 1.0 / 3.0}});
  t.rows.push_back({"g", "r.ply", "e,1.ply", std::nan(""), {100, -1e-300}});
  write_feature_csv(t, dir / "f.csv");
  const auto back = read_feature_csv(dir / "f.csv");
  CHECK(back.config_hash() == "abc");
  CHECK(back.columns == t.columns);
  REQUIRE(back.size() == 2);
  CHECK(back.rows[0].values == t.rows[0].values);
  CHECK(back.rows[1].dist == "e,1.ply");
  CHECK(std::isnan(back.rows[1].mos));
  CHECK(back.rows[1].values == t.rows[1].values);
  CHECK(format_feature_csv(back) == format_feature_csv(t));
  CHECK(back.matrix({"y", "x"})(0, 0) == 1.0 / 3.0);
  CHECK(code_of([&] { back.column("z"); }) == ErrorCode::MissingFeatureColumn);

  write_text(dir / "v2.csv", "#schema_version=2\ngroup_id,ref,dist,mos,x\n");
  CHECK(code_of([&] { read_feature_csv(dir / "v2.csv"); }) == ErrorCode::SchemaVersion);
  write_text(dir / "none.csv", "group_id,ref,dist,mos,x\n");
  CHECK(code_of([&] { read_feature_csv(dir / "none.csv"); }) == ErrorCode::SchemaVersion);
}

TEST_CASE("extraction errors name the row") {
  TempDir dir;
  Rng rng(1);
  save_ply(pcqkit::testing::sphere_cloud(500, 40, rng), dir / "ok.ply", false);
  write_text(dir / "broken.ply", "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n");
  write_text(dir / "m.csv", "ref,dist,mos\nok.ply,broken.ply,3\n");
  try {
    extract_features(load_manifest(dir / "m.csv"), Config::defaults(), std::nullopt, 1);
    FAIL("expected CountMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CountMismatch);
    const std::string what = e.what();
    CHECK(what.find("row 1") != std::string::npos);
    CHECK(what.find("broken.ply") != std::string::npos);
  }
}
