#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "weakspot/core_data.hpp"

namespace weakspot {

/// A minority slice of `source_class` displaced toward `target_class`.
struct PlantedSubgroup {
  std::size_t source_class = 0;
  std::size_t target_class = 1;
  std::string attribute = "group";
  std::string minority_value = "minority";
  std::string majority_value = "majority";
  double fraction = 0.2;
  double beta = 0.8;
  // Object every subgroup record carries with high relevance.
  std::string object_label = "potted_plant";
};

/// Gaussian class clusters around mutually equidistant centroids. The
/// defaults are the frozen geometry the acceptance suite verifies.
struct BenchmarkSpec {
  std::size_t class_count = 4;
  std::size_t dim = 16;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  double spacing = 10.0;  // pairwise centroid distance
  double noise = 0.5;     // per-coordinate standard deviation
  PlantedSubgroup subgroup;
  std::uint64_t seed = 7;
  std::vector<std::string> labels;  // empty: built-in occupation names

  void validate() const;
  std::vector<std::string> class_labels() const;
  std::vector<float> centroid(std::size_t cls) const;
  std::vector<float> subgroup_center() const;
  std::size_t subgroup_size(std::size_t per_class) const;

  /// Radius that covers a subgroup point's cluster-mates: 1.3x the typical
  /// distance between two noisy samples of one centre.
  double planted_radius() const;
};

Json to_json(const BenchmarkSpec& spec);
BenchmarkSpec benchmark_spec_from_json(const Json& j);

struct Benchmark {
  DatasetBundle train;
  DatasetBundle test;
};

Benchmark make_benchmark(const BenchmarkSpec& spec);

/// True when `record` belongs to the planted subgroup of `spec`.
bool in_planted_subgroup(const Record& record, const BenchmarkSpec& spec);

}  // namespace weakspot
