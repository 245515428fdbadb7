#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphst/matrix.hpp"
#include "graphst/rng.hpp"

namespace graphst {

// The J spatial regions of a city; ids are dense 0..J-1. Centroids are
// planar coordinates in arbitrary units and may be absent for loaded data.
struct RegionSet {
  int count = 0;
  std::vector<std::pair<double, double>> centroids;  // empty when unknown
};

struct PoiMatrix {
  Matrix counts;                        // J x C, non-negative
  std::vector<std::string> categories;  // C names
};

struct TrajectoryRecord {
  int src_region = 0;
  int dst_region = 0;
  int src_slot = 0;
  int dst_slot = 0;
};

struct TrajectorySet {
  std::vector<TrajectoryRecord> records;
  int slot_count = 0;  // T
};

struct DistanceMatrix {
  Matrix dist;  // J x J, symmetric within 1e-9, zero diagonal, non-negative
};

struct LabelSeries {
  std::vector<double> targets;  // length J
};

struct Dataset {
  RegionSet regions;
  PoiMatrix poi;
  TrajectorySet trajectories;
  DistanceMatrix distances;
  std::optional<LabelSeries> labels;
};

// Validates every type invariant; throws ParseError/ValidationError with the
// offending file, line and column.
Dataset load_dataset(const std::string& poi_path, const std::string& traj_path,
                     const std::string& dist_path,
                     const std::optional<std::string>& labels_path = std::nullopt);

// Convenience wrappers over the four fixed file names inside `dir`.
Dataset load_dataset_dir(const std::string& dir);
void write_dataset(const Dataset& ds, const std::string& dir);

bool dataset_equal(const Dataset& a, const Dataset& b);

// Per-region arrival counts per time slot, derived from the trajectories.
// Used as the activity series for density-stratified evaluation.
std::vector<std::vector<double>> arrival_series(const TrajectorySet& traj, int region_count);

// Planted community labels, written next to a generated dataset.
void write_communities(const std::vector<int>& communities, const std::string& path);
std::vector<int> load_communities(const std::string& path);

struct SynthConfig {
  std::uint64_t seed = 7;
  int region_count = 50;    // J
  int category_count = 12;  // C
  int slot_count = 4;       // T
  int communities = 4;      // k
  double noise = 0.1;
  double trip_density = 5.0;  // mean extra trips per (region, slot)
};

struct SynthResult {
  Dataset dataset;
  std::vector<int> communities;  // length J
};

// Deterministic desk-scale city: k planted communities drive the POI
// profiles, trip destinations, coordinates and labels.
SynthResult synth_city(const SynthConfig& cfg);

}  // namespace graphst
