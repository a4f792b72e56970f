#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "weakspot/core_data.hpp"
#include "weakspot/neighbor_index.hpp"

namespace weakspot {

struct Prediction {
  std::string id;
  std::string predicted_class;
  std::vector<double> scores;  // empty when the producer gave labels only
};

/// id -> label lookup used for both ground truth and predictions.
using LabelMap = std::unordered_map<std::string, std::string>;

LabelMap prediction_map(std::span<const Prediction> predictions);
LabelMap truth_map(const DatasetBundle& bundle);

enum class ReferenceSet { test, train, all };

std::string_view to_string(ReferenceSet reference);
ReferenceSet parse_reference_set(std::string_view text);

struct AuditConfig {
  std::size_t k = 100;
  double radius = 0.0;
  double perplexity_threshold = 0.70;
  std::size_t min_neighbors = 5;
  ReferenceSet reference = ReferenceSet::test;

  void validate() const;
};

struct Weakspot {
  std::string pivotal_id;
  std::string true_class;
  std::string predicted_class;
  double radius = 0.0;
  double perplexity = 0.0;
  std::vector<std::string> neighbor_ids;

  friend bool operator==(const Weakspot&, const Weakspot&) = default;
};

struct GridRow {
  double radius = 0.0;
  double perplexity_threshold = 0.0;
  std::size_t weakspot_count = 0;
  std::vector<std::string> pivotal_ids;
};

struct GridReport {
  std::vector<GridRow> rows;
};

struct PairSummary {
  std::size_t count = 0;
  std::vector<std::string> pivotal_ids;
};

using ClassPair = std::pair<std::string, std::string>;  // (true, predicted)

/// Fraction of `neighbors` whose truth and prediction both equal
/// `erroneous_class`.
double perplexity(std::span<const Neighbor> neighbors, std::string_view erroneous_class,
                  const LabelMap& truth, const LabelMap& predictions);

/// Every misclassified record in `index` whose in-radius neighbourhood
/// (self excluded, capped at k) has at least min_neighbors members and a
/// perplexity of at least the threshold. Sorted by descending perplexity,
/// then ascending pivotal id.
std::vector<Weakspot> detect(const DatasetBundle& bundle, const LabelMap& predictions,
                             const NeighborIndex& index, const AuditConfig& config);

GridReport grid(const DatasetBundle& bundle, const LabelMap& predictions,
                const NeighborIndex& index, std::span<const double> d_values,
                double perplexity_threshold, const AuditConfig& base = {});

std::map<ClassPair, PairSummary> pair_summary(std::span<const Weakspot> weakspots);

Json to_json(const Weakspot& weakspot);
Weakspot weakspot_from_json(const Json& j);
Json to_json(const GridReport& report);
Json to_json(const std::map<ClassPair, PairSummary>& summary);
Json to_json(const AuditConfig& config);
AuditConfig audit_config_from_json(const Json& j);

}  // namespace weakspot
