#include "weakspot/weakspot_audit.hpp"

#include <algorithm>

#include "weakspot/error.hpp"

namespace weakspot {

LabelMap prediction_map(std::span<const Prediction> predictions) {
  LabelMap map;
  map.reserve(predictions.size());
  for (const auto& p : predictions) map[p.id] = p.predicted_class;
  return map;
}

LabelMap truth_map(const DatasetBundle& bundle) {
  LabelMap map;
  map.reserve(bundle.count());
  for (const auto& r : bundle.records()) map[r.id] = r.true_class;
  return map;
}

std::string_view to_string(ReferenceSet reference) {
  switch (reference) {
    case ReferenceSet::test: return "test";
    case ReferenceSet::train: return "train";
    case ReferenceSet::all: return "all";
  }
  return "test";
}

ReferenceSet parse_reference_set(std::string_view text) {
  if (text == "test") return ReferenceSet::test;
  if (text == "train") return ReferenceSet::train;
  if (text == "all") return ReferenceSet::all;
  throw Error(ErrorCode::InvalidConfig, "unknown reference set '" + std::string(text) + "'");
}

void AuditConfig::validate() const {
  if (!(perplexity_threshold >= 0.0 && perplexity_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "perplexity threshold outside [0,1]");
  }
  if (!(radius >= 0.0)) throw Error(ErrorCode::InvalidConfig, "radius must be non-negative");
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be at least 1");
  if (min_neighbors == 0) throw Error(ErrorCode::InvalidConfig, "min_neighbors must be positive");
}

double perplexity(std::span<const Neighbor> neighbors, std::string_view erroneous_class,
                  const LabelMap& truth, const LabelMap& predictions) {
  if (neighbors.empty()) {
    throw Error(ErrorCode::NoNeighbors, "perplexity of an empty neighbourhood");
  }
  std::size_t hits = 0;
  for (const auto& n : neighbors) {
    const auto t = truth.find(n.id);
    const auto p = predictions.find(n.id);
    if (p == predictions.end()) {
      throw Error(ErrorCode::MissingPrediction, "no prediction for neighbour '" + n.id + "'");
    }
    if (t != truth.end() && t->second == erroneous_class && p->second == erroneous_class) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(neighbors.size());
}

std::vector<Weakspot> detect(const DatasetBundle& bundle, const LabelMap& predictions,
                             const NeighborIndex& index, const AuditConfig& config) {
  config.validate();
  const LabelMap truth = truth_map(bundle);

  for (const auto& id : index.ids()) {
    if (!predictions.contains(id)) {
      throw Error(ErrorCode::MissingPrediction, "no prediction for reference record '" + id + "'");
    }
  }

  std::vector<Weakspot> found;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const std::string& id = index.ids()[i];
    const std::string& predicted = predictions.at(id);
    const auto t = truth.find(id);
    if (t == truth.end() || t->second == predicted) continue;

    const auto neighbors = index.within_radius(index.vector(i), config.radius, config.k, id);
    if (neighbors.size() < config.min_neighbors) continue;
    const double perp = perplexity(neighbors, predicted, truth, predictions);
    if (perp < config.perplexity_threshold) continue;

    Weakspot w;
    w.pivotal_id = id;
    w.true_class = t->second;
    w.predicted_class = predicted;
    w.radius = config.radius;
    w.perplexity = perp;
    w.neighbor_ids.reserve(neighbors.size());
    for (const auto& n : neighbors) w.neighbor_ids.push_back(n.id);
    found.push_back(std::move(w));
  }

  std::sort(found.begin(), found.end(), [](const Weakspot& a, const Weakspot& b) {
    if (a.perplexity != b.perplexity) return a.perplexity > b.perplexity;
    return a.pivotal_id < b.pivotal_id;
  });
  return found;
}

GridReport grid(const DatasetBundle& bundle, const LabelMap& predictions,
                const NeighborIndex& index, std::span<const double> d_values,
                double perplexity_threshold, const AuditConfig& base) {
  if (d_values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "grid needs at least one radius");
  }
  GridReport report;
  for (double d : d_values) {
    AuditConfig config = base;
    config.radius = d;
    config.perplexity_threshold = perplexity_threshold;
    const auto weakspots = detect(bundle, predictions, index, config);
    GridRow row;
    row.radius = d;
    row.perplexity_threshold = perplexity_threshold;
    row.weakspot_count = weakspots.size();
    for (const auto& w : weakspots) row.pivotal_ids.push_back(w.pivotal_id);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::map<ClassPair, PairSummary> pair_summary(std::span<const Weakspot> weakspots) {
  std::map<ClassPair, PairSummary> summary;
  for (const auto& w : weakspots) {
    auto& entry = summary[{w.true_class, w.predicted_class}];
    ++entry.count;
    entry.pivotal_ids.push_back(w.pivotal_id);
  }
  return summary;
}

Json to_json(const Weakspot& w) {
  return {{"pivotal_id", w.pivotal_id},
          {"true_class", w.true_class},
          {"predicted_class", w.predicted_class},
          {"radius", w.radius},
          {"perplexity", w.perplexity},
          {"neighbor_ids", w.neighbor_ids}};
}

Weakspot weakspot_from_json(const Json& j) {
  try {
    Weakspot w;
    w.pivotal_id = j.at("pivotal_id").get<std::string>();
    w.true_class = j.at("true_class").get<std::string>();
    w.predicted_class = j.at("predicted_class").get<std::string>();
    w.radius = j.at("radius").get<double>();
    w.perplexity = j.at("perplexity").get<double>();
    w.neighbor_ids = j.at("neighbor_ids").get<std::vector<std::string>>();
    return w;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("weakspot: ") + e.what());
  }
}

Json to_json(const GridReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"radius", row.radius},
                    {"perplexity_threshold", row.perplexity_threshold},
                    {"weakspot_count", row.weakspot_count},
                    {"pivotal_ids", row.pivotal_ids}});
  }
  return {{"rows", std::move(rows)}};
}

Json to_json(const std::map<ClassPair, PairSummary>& summary) {
  Json out = Json::array();
  for (const auto& [pair, entry] : summary) {
    out.push_back({{"true_class", pair.first},
                   {"predicted_class", pair.second},
                   {"count", entry.count},
                   {"pivotal_ids", entry.pivotal_ids}});
  }
  return out;
}

Json to_json(const AuditConfig& config) {
  return {{"k", config.k},
          {"radius", config.radius},
          {"perplexity_threshold", config.perplexity_threshold},
          {"min_neighbors", config.min_neighbors},
          {"reference", to_string(config.reference)}};
}

AuditConfig audit_config_from_json(const Json& j) {
  AuditConfig config;
  try {
    config.k = j.value("k", config.k);
    config.radius = j.value("radius", config.radius);
    config.perplexity_threshold = j.value("perplexity_threshold", config.perplexity_threshold);
    config.min_neighbors = j.value("min_neighbors", config.min_neighbors);
    config.reference = parse_reference_set(j.value("reference", std::string("test")));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("audit: ") + e.what());
  }
  config.validate();
  return config;
}

}  // namespace weakspot
