#include "graphst/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "graphst/csv.hpp"
#include "graphst/errors.hpp"

namespace graphst {

namespace {

constexpr double kSymmetryTol = 1e-9;

void check_region_id(long id, int region_count, const std::string& file, int line) {
  if (id < 0 || id >= region_count)
    throw ValidationError(file + " line " + std::to_string(line) + ": region id " +
                          std::to_string(id) + " out of range [0, " +
                          std::to_string(region_count) + ")");
}

PoiMatrix load_poi(const std::string& path, int* region_count_out) {
  CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "region_id")
    throw ParseError(path + " line 1: first header field must be region_id");
  const int category_count = static_cast<int>(table.header.size()) - 1;
  if (category_count < 1) throw ParseError(path + " line 1: need at least one category column");
  const int region_count = static_cast<int>(table.rows.size());

  PoiMatrix poi;
  poi.categories.assign(table.header.begin() + 1, table.header.end());
  poi.counts = Matrix(region_count, category_count);
  std::vector<bool> seen(region_count, false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = static_cast<int>(r) + 2;
    const long id = parse_int_field(table.rows[r][0], path, line, 1);
    check_region_id(id, region_count, path, line);
    if (seen[id])
      throw ValidationError(path + " line " + std::to_string(line) + ": duplicate region id " +
                            std::to_string(id));
    seen[id] = true;
    for (int c = 0; c < category_count; ++c) {
      const double v = parse_double_field(table.rows[r][c + 1], path, line, c + 2);
      if (v < 0.0)
        throw ValidationError(path + " line " + std::to_string(line) + " column " +
                              std::to_string(c + 2) + ": negative POI count");
      poi.counts.at(static_cast<int>(id), c) = v;
    }
  }
  *region_count_out = region_count;
  return poi;
}

TrajectorySet load_trajectories(const std::string& path, int region_count) {
  CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"src_region", "dst_region", "src_slot", "dst_slot"};
  if (table.header != expected)
    throw ParseError(path + " line 1: header must be src_region,dst_region,src_slot,dst_slot");
  TrajectorySet traj;
  traj.records.reserve(table.rows.size());
  int max_slot = -1;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = static_cast<int>(r) + 2;
    TrajectoryRecord rec;
    rec.src_region = static_cast<int>(parse_int_field(table.rows[r][0], path, line, 1));
    rec.dst_region = static_cast<int>(parse_int_field(table.rows[r][1], path, line, 2));
    rec.src_slot = static_cast<int>(parse_int_field(table.rows[r][2], path, line, 3));
    rec.dst_slot = static_cast<int>(parse_int_field(table.rows[r][3], path, line, 4));
    check_region_id(rec.src_region, region_count, path, line);
    check_region_id(rec.dst_region, region_count, path, line);
    if (rec.src_slot < 0 || rec.dst_slot < rec.src_slot)
      throw ValidationError(path + " line " + std::to_string(line) +
                            ": slots must satisfy 0 <= src_slot <= dst_slot");
    max_slot = std::max(max_slot, rec.dst_slot);
    traj.records.push_back(rec);
  }
  traj.slot_count = max_slot + 1;
  return traj;
}

DistanceMatrix load_distances(const std::string& path, int region_count) {
  CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"region_a", "region_b", "distance"};
  if (table.header != expected)
    throw ParseError(path + " line 1: header must be region_a,region_b,distance");
  Matrix dist(region_count, region_count);
  Matrix given(region_count, region_count);  // 1 where an entry was supplied
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = static_cast<int>(r) + 2;
    const long a = parse_int_field(table.rows[r][0], path, line, 1);
    const long b = parse_int_field(table.rows[r][1], path, line, 2);
    const double d = parse_double_field(table.rows[r][2], path, line, 3);
    check_region_id(a, region_count, path, line);
    check_region_id(b, region_count, path, line);
    if (d < 0.0)
      throw ValidationError(path + " line " + std::to_string(line) + ": negative distance");
    if (a == b && d != 0.0)
      throw ValidationError(path + " line " + std::to_string(line) +
                            ": nonzero self-distance for region " + std::to_string(a));
    const int ia = static_cast<int>(a), ib = static_cast<int>(b);
    if (given.at(ia, ib) != 0.0 && std::fabs(dist.at(ia, ib) - d) > kSymmetryTol)
      throw ValidationError(path + " line " + std::to_string(line) +
                            ": asymmetric distance entry for pair (" + std::to_string(a) + ", " +
                            std::to_string(b) + ")");
    dist.at(ia, ib) = d;
    dist.at(ib, ia) = d;  // symmetric completion
    given.at(ia, ib) = 1.0;
    given.at(ib, ia) = 1.0;
  }
  return DistanceMatrix{std::move(dist)};
}

LabelSeries load_labels(const std::string& path, int region_count) {
  CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"region_id", "target"};
  if (table.header != expected)
    throw ParseError(path + " line 1: header must be region_id,target");
  LabelSeries labels;
  labels.targets.assign(region_count, 0.0);
  std::vector<bool> seen(region_count, false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = static_cast<int>(r) + 2;
    const long id = parse_int_field(table.rows[r][0], path, line, 1);
    check_region_id(id, region_count, path, line);
    if (seen[id])
      throw ValidationError(path + " line " + std::to_string(line) + ": duplicate region id");
    seen[id] = true;
    labels.targets[id] = parse_double_field(table.rows[r][1], path, line, 2);
  }
  for (int j = 0; j < region_count; ++j)
    if (!seen[j])
      throw ValidationError(path + ": missing target for region " + std::to_string(j));
  return labels;
}

}  // namespace

Dataset load_dataset(const std::string& poi_path, const std::string& traj_path,
                     const std::string& dist_path,
                     const std::optional<std::string>& labels_path) {
  Dataset ds;
  int region_count = 0;
  ds.poi = load_poi(poi_path, &region_count);
  ds.regions.count = region_count;
  ds.trajectories = load_trajectories(traj_path, region_count);
  ds.distances = load_distances(dist_path, region_count);
  if (labels_path) ds.labels = load_labels(*labels_path, region_count);
  return ds;
}

Dataset load_dataset_dir(const std::string& dir) {
  std::optional<std::string> labels;
  // labels.csv is optional; probe by attempting to open it.
  const std::string labels_path = dir + "/labels.csv";
  if (std::ifstream probe{labels_path}; probe.good()) labels = labels_path;
  return load_dataset(dir + "/poi.csv", dir + "/trajectories.csv", dir + "/distances.csv",
                      labels);
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  const int region_count = ds.regions.count;
  {
    CsvTable t;
    t.header.push_back("region_id");
    for (const auto& c : ds.poi.categories) t.header.push_back(c);
    for (int j = 0; j < region_count; ++j) {
      std::vector<std::string> row{std::to_string(j)};
      for (int c = 0; c < ds.poi.counts.cols(); ++c)
        row.push_back(format_double(ds.poi.counts.at(j, c)));
      t.rows.push_back(std::move(row));
    }
    write_csv(dir + "/poi.csv", t);
  }
  {
    CsvTable t;
    t.header = {"src_region", "dst_region", "src_slot", "dst_slot"};
    for (const auto& r : ds.trajectories.records)
      t.rows.push_back({std::to_string(r.src_region), std::to_string(r.dst_region),
                        std::to_string(r.src_slot), std::to_string(r.dst_slot)});
    write_csv(dir + "/trajectories.csv", t);
  }
  {
    CsvTable t;
    t.header = {"region_a", "region_b", "distance"};
    for (int a = 0; a < region_count; ++a)
      for (int b = a + 1; b < region_count; ++b)
        t.rows.push_back(
            {std::to_string(a), std::to_string(b), format_double(ds.distances.dist.at(a, b))});
    write_csv(dir + "/distances.csv", t);
  }
  if (ds.labels) {
    CsvTable t;
    t.header = {"region_id", "target"};
    for (int j = 0; j < region_count; ++j)
      t.rows.push_back({std::to_string(j), format_double(ds.labels->targets[j])});
    write_csv(dir + "/labels.csv", t);
  }
}

bool dataset_equal(const Dataset& a, const Dataset& b) {
  // Centroids are generation metadata outside the persisted schema; the
  // round-trip identity covers everything the files carry.
  if (a.regions.count != b.regions.count) return false;
  if (!(a.poi.counts == b.poi.counts) || a.poi.categories != b.poi.categories) return false;
  if (a.trajectories.slot_count != b.trajectories.slot_count) return false;
  if (a.trajectories.records.size() != b.trajectories.records.size()) return false;
  for (std::size_t i = 0; i < a.trajectories.records.size(); ++i) {
    const auto& ra = a.trajectories.records[i];
    const auto& rb = b.trajectories.records[i];
    if (ra.src_region != rb.src_region || ra.dst_region != rb.dst_region ||
        ra.src_slot != rb.src_slot || ra.dst_slot != rb.dst_slot)
      return false;
  }
  if (!(a.distances.dist == b.distances.dist)) return false;
  if (a.labels.has_value() != b.labels.has_value()) return false;
  if (a.labels && a.labels->targets != b.labels->targets) return false;
  return true;
}

std::vector<std::vector<double>> arrival_series(const TrajectorySet& traj, int region_count) {
  std::vector<std::vector<double>> series(
      region_count, std::vector<double>(std::max(traj.slot_count, 1), 0.0));
  for (const auto& r : traj.records) series[r.dst_region][r.dst_slot] += 1.0;
  return series;
}

void write_communities(const std::vector<int>& communities, const std::string& path) {
  CsvTable t;
  t.header = {"region_id", "community"};
  for (std::size_t j = 0; j < communities.size(); ++j)
    t.rows.push_back({std::to_string(j), std::to_string(communities[j])});
  write_csv(path, t);
}

std::vector<int> load_communities(const std::string& path) {
  CsvTable t = read_csv(path);
  const std::vector<std::string> expected = {"region_id", "community"};
  if (t.header != expected)
    throw ParseError(path + " line 1: header must be region_id,community");
  std::vector<int> out(t.rows.size(), -1);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int line = static_cast<int>(r) + 2;
    const long id = parse_int_field(t.rows[r][0], path, line, 1);
    check_region_id(id, static_cast<int>(t.rows.size()), path, line);
    out[id] = static_cast<int>(parse_int_field(t.rows[r][1], path, line, 2));
  }
  return out;
}

SynthResult synth_city(const SynthConfig& cfg) {
  if (cfg.region_count < 1 || cfg.category_count < 1 || cfg.slot_count < 1)
    throw ConfigError("synth_city: sizes must be positive");
  if (cfg.communities < 1 || cfg.communities > cfg.region_count)
    throw ConfigError("synth_city: need 1 <= communities <= regions");
  if (cfg.noise < 0.0) throw ConfigError("synth_city: noise must be non-negative");

  const int j_count = cfg.region_count;
  const int c_count = cfg.category_count;
  const int t_count = cfg.slot_count;
  const int k = cfg.communities;

  Rng root(cfg.seed);
  Rng rng_coord = root.fork("coords");
  Rng rng_poi = root.fork("poi");
  Rng rng_traj = root.fork("trajectories");
  Rng rng_label = root.fork("labels");

  SynthResult out;
  Dataset& ds = out.dataset;
  ds.regions.count = j_count;

  // Balanced round-robin community assignment.
  out.communities.resize(j_count);
  std::vector<std::vector<int>> members(k);
  for (int j = 0; j < j_count; ++j) {
    out.communities[j] = j % k;
    members[j % k].push_back(j);
  }

  // Coordinates: community centers on a circle, members scattered around them.
  const double ring_radius = 10.0;
  ds.regions.centroids.resize(j_count);
  for (int j = 0; j < j_count; ++j) {
    const int c = out.communities[j];
    const double angle = 2.0 * M_PI * c / k;
    ds.regions.centroids[j] = {ring_radius * std::cos(angle) + rng_coord.gaussian(0.0, 1.0),
                               ring_radius * std::sin(angle) + rng_coord.gaussian(0.0, 1.0)};
  }
  Matrix dist(j_count, j_count);
  for (int a = 0; a < j_count; ++a)
    for (int b = a + 1; b < j_count; ++b) {
      const double dx = ds.regions.centroids[a].first - ds.regions.centroids[b].first;
      const double dy = ds.regions.centroids[a].second - ds.regions.centroids[b].second;
      const double d = std::sqrt(dx * dx + dy * dy);
      dist.at(a, b) = d;
      dist.at(b, a) = d;
    }
  ds.distances.dist = std::move(dist);

  // POI counts: each community prefers its own category block.
  ds.poi.categories.resize(c_count);
  for (int c = 0; c < c_count; ++c) ds.poi.categories[c] = "cat_" + std::to_string(c);
  ds.poi.counts = Matrix(j_count, c_count);
  for (int j = 0; j < j_count; ++j) {
    const int community = out.communities[j];
    for (int c = 0; c < c_count; ++c) {
      const double base = (c % k == community) ? 6.0 : 0.6;
      const double rate = std::max(0.05, base * (1.0 + cfg.noise * rng_poi.gaussian()));
      ds.poi.counts.at(j, c) = static_cast<double>(rng_poi.poisson(rate));
    }
  }

  // Trajectories: one guaranteed trip per (region, slot) keeps every slot
  // populated; extras follow trip_density. Destinations stay mostly
  // intra-community.
  const double p_intra = std::clamp(0.9 - 0.5 * cfg.noise, 0.5, 1.0);
  ds.trajectories.slot_count = t_count;
  for (int j = 0; j < j_count; ++j) {
    const int community = out.communities[j];
    for (int t = 0; t < t_count; ++t) {
      const int extra = rng_traj.poisson(cfg.trip_density);
      for (int n = 0; n < 1 + extra; ++n) {
        TrajectoryRecord rec;
        rec.src_region = j;
        rec.src_slot = t;
        int dst_community = community;
        if (k > 1 && !rng_traj.bernoulli(p_intra)) {
          dst_community = rng_traj.uniform_int(k - 1);
          if (dst_community >= community) ++dst_community;
        }
        const auto& pool = members[dst_community];
        rec.dst_region = pool[rng_traj.uniform_int(static_cast<int>(pool.size()))];
        rec.dst_slot = std::min(rec.src_slot + rng_traj.uniform_int(2), t_count - 1);
        ds.trajectories.records.push_back(rec);
      }
    }
  }

  // Labels: linear in the community one-hot plus Gaussian noise.
  LabelSeries labels;
  labels.targets.resize(j_count);
  for (int j = 0; j < j_count; ++j)
    labels.targets[j] = 5.0 + 3.0 * out.communities[j] + cfg.noise * rng_label.gaussian(0.0, 2.0);
  ds.labels = std::move(labels);

  return out;
}

}  // namespace graphst
