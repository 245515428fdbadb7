#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "graphst/dataset.hpp"
#include "graphst/errors.hpp"

using namespace graphst;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("graphst_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_two_region_fixture(const fs::path& dir) {
  write_file(dir / "poi.csv",
             "region_id,food,shops\n"
             "0,3,1\n"
             "1,0,5\n");
  write_file(dir / "trajectories.csv",
             "src_region,dst_region,src_slot,dst_slot\n"
             "0,1,0,1\n"
             "1,0,1,1\n");
  write_file(dir / "distances.csv",
             "region_a,region_b,distance\n"
             "0,1,2.5\n");
  write_file(dir / "labels.csv",
             "region_id,target\n"
             "0,1.5\n"
             "1,2.5\n");
}

}  // namespace

TEST_CASE("two-region fixture loads with all invariants") {
  auto dir = fresh_dir("fixture");
  write_two_region_fixture(dir);
  Dataset ds = load_dataset_dir(dir.string());
  CHECK(ds.regions.count == 2);
  CHECK(ds.poi.categories == std::vector<std::string>{"food", "shops"});
  CHECK(ds.poi.counts.at(0, 0) == 3.0);
  CHECK(ds.trajectories.slot_count == 2);
  CHECK(ds.distances.dist.at(0, 1) == 2.5);
  CHECK(ds.distances.dist.at(1, 0) == 2.5);
  CHECK(ds.distances.dist.at(0, 0) == 0.0);
  REQUIRE(ds.labels.has_value());
  CHECK(ds.labels->targets == std::vector<double>{1.5, 2.5});
}

TEST_CASE("trajectory with dst_slot before src_slot is rejected") {
  auto dir = fresh_dir("badslot");
  write_two_region_fixture(dir);
  write_file(dir / "trajectories.csv",
             "src_region,dst_region,src_slot,dst_slot\n"
             "0,1,1,0\n");
  CHECK_THROWS_AS(load_dataset_dir(dir.string()), ValidationError);
}

TEST_CASE("asymmetric distance entries are rejected") {
  auto dir = fresh_dir("asym");
  write_two_region_fixture(dir);
  write_file(dir / "distances.csv",
             "region_a,region_b,distance\n"
             "0,1,2.5\n"
             "1,0,2.6\n");
  CHECK_THROWS_AS(load_dataset_dir(dir.string()), ValidationError);
}

TEST_CASE("region id out of range is rejected") {
  auto dir = fresh_dir("badid");
  write_two_region_fixture(dir);
  write_file(dir / "trajectories.csv",
             "src_region,dst_region,src_slot,dst_slot\n"
             "0,7,0,0\n");
  CHECK_THROWS_AS(load_dataset_dir(dir.string()), ValidationError);
}

TEST_CASE("malformed numeric field names file, line and column") {
  auto dir = fresh_dir("badnum");
  write_two_region_fixture(dir);
  write_file(dir / "poi.csv",
             "region_id,food,shops\n"
             "0,3,x\n"
             "1,0,5\n");
  try {
    load_dataset_dir(dir.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("poi.csv") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("column 3") != std::string::npos);
  }
}

TEST_CASE("synthetic city round-trips through the csv schemas") {
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.region_count = 20;
  cfg.category_count = 8;
  cfg.slot_count = 3;
  cfg.communities = 4;
  SynthResult synth = synth_city(cfg);
  auto dir = fresh_dir("roundtrip");
  write_dataset(synth.dataset, dir.string());
  Dataset reloaded = load_dataset_dir(dir.string());
  CHECK(dataset_equal(synth.dataset, reloaded));

  // And the reloaded copy re-serializes byte-identically.
  auto dir2 = fresh_dir("roundtrip2");
  write_dataset(reloaded, dir2.string());
  for (const char* name : {"poi.csv", "trajectories.csv", "distances.csv", "labels.csv"})
    CHECK(read_file(dir / name) == read_file(dir2 / name));
}

TEST_CASE("same seed produces byte-identical dataset files") {
  SynthConfig cfg;
  cfg.seed = 99;
  cfg.region_count = 30;
  auto dir_a = fresh_dir("det_a");
  auto dir_b = fresh_dir("det_b");
  write_dataset(synth_city(cfg).dataset, dir_a.string());
  write_dataset(synth_city(cfg).dataset, dir_b.string());
  for (const char* name : {"poi.csv", "trajectories.csv", "distances.csv", "labels.csv"})
    CHECK(read_file(dir_a / name) == read_file(dir_b / name));
}

TEST_CASE("degenerate planting: one community, zero noise") {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.region_count = 12;
  cfg.communities = 1;
  cfg.noise = 0.0;
  SynthResult synth = synth_city(cfg);
  REQUIRE(synth.dataset.labels.has_value());
  for (double t : synth.dataset.labels->targets) CHECK(t == synth.dataset.labels->targets[0]);
  for (int c : synth.communities) CHECK(c == 0);
}

TEST_CASE("planted communities dominate trajectory destinations") {
  SynthConfig cfg;
  cfg.seed = 3;
  cfg.region_count = 100;
  cfg.communities = 4;
  cfg.noise = 0.1;
  SynthResult synth = synth_city(cfg);
  long intra = 0, total = 0;
  for (const auto& r : synth.dataset.trajectories.records) {
    ++total;
    if (synth.communities[r.src_region] == synth.communities[r.dst_region]) ++intra;
  }
  CHECK(total > 0);
  CHECK(static_cast<double>(intra) / total > 0.7);
}

TEST_CASE("synth_city validates sizes") {
  SynthConfig cfg;
  cfg.region_count = 3;
  cfg.communities = 5;
  CHECK_THROWS_AS(synth_city(cfg), ConfigError);
}

TEST_CASE("communities round-trip through their csv") {
  SynthConfig cfg;
  cfg.seed = 21;
  cfg.region_count = 15;
  cfg.communities = 3;
  SynthResult synth = synth_city(cfg);
  auto dir = fresh_dir("communities");
  write_communities(synth.communities, (dir / "communities.csv").string());
  CHECK(load_communities((dir / "communities.csv").string()) == synth.communities);
}

TEST_CASE("arrival series counts destination slots") {
  TrajectorySet traj;
  traj.slot_count = 3;
  traj.records = {{0, 1, 0, 2}, {0, 1, 1, 2}, {1, 0, 0, 0}};
  auto series = arrival_series(traj, 2);
  CHECK(series[1][2] == 2.0);
  CHECK(series[0][0] == 1.0);
  CHECK(series[1][0] == 0.0);
}
