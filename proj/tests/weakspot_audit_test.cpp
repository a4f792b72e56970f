#include <set>

#include "support.hpp"

using namespace weakspot;
using namespace weakspot::testing;

namespace {

// A cluster of six "nurse" points at the origin with one "doctor" predicted as
// nurse, and a far-away doctor cluster.
struct Scenario {
  DatasetBundle bundle;
  LabelMap predictions;
};

Scenario nurse_cluster(std::size_t nurses_predicted_nurse = 6) {
  EmbeddingStore store(2);
  std::vector<Record> records;
  LabelMap predictions;
  const auto add = [&](const std::string& id, const std::string& truth, const std::string& pred,
                       float x, float y) {
    const std::vector<float> row = {x, y};
    store.append(row);
    Record r;
    r.id = id;
    r.split = Split::test;
    r.true_class = truth;
    records.push_back(r);
    predictions[id] = pred;
  };
  add("doc-pivot", "doctor", "nurse", 0.0f, 0.0f);
  for (std::size_t i = 0; i < 6; ++i) {
    const float angle = static_cast<float>(i);
    add("nurse-" + std::to_string(i), "nurse", i < nurses_predicted_nurse ? "nurse" : "doctor",
        0.5f * std::cos(angle), 0.5f * std::sin(angle));
  }
  for (std::size_t i = 0; i < 6; ++i) {
    add("doc-" + std::to_string(i), "doctor", "doctor", 20.0f + 0.1f * static_cast<float>(i), 0.0f);
  }
  return {bind_records(std::move(store), std::move(records)), predictions};
}

AuditConfig config_at(double radius, double threshold, std::size_t min_neighbors = 5) {
  AuditConfig c;
  c.radius = radius;
  c.perplexity_threshold = threshold;
  c.min_neighbors = min_neighbors;
  return c;
}

// Independent oracle: scan every pair, no index.
std::vector<std::string> oracle_pivotals(const DatasetBundle& bundle, const LabelMap& predictions,
                                         const AuditConfig& config) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < bundle.count(); ++i) {
    const auto& r = bundle.records()[i];
    const auto& pred = predictions.at(r.id);
    if (pred == r.true_class) continue;
    auto neighbors = scan_neighbors(bundle, bundle.vector(i), config.k, r.id);
    std::erase_if(neighbors, [&](const Neighbor& n) { return n.distance > config.radius; });
    if (neighbors.size() < config.min_neighbors) continue;
    std::size_t hits = 0;
    for (const auto& n : neighbors) {
      const auto& nr = bundle.records()[*bundle.find(n.id)];
      if (nr.true_class == pred && predictions.at(n.id) == pred) ++hits;
    }
    if (static_cast<double>(hits) / static_cast<double>(neighbors.size()) >= config.perplexity_threshold) {
      out.push_back(r.id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> sorted_ids(const std::vector<Weakspot>& weakspots) {
  std::vector<std::string> ids;
  for (const auto& w : weakspots) ids.push_back(w.pivotal_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

TEST(Perplexity, CountsNeighboursLabelledAndPredictedAsTheErroneousClass) {
  const LabelMap truth = {{"a", "nurse"}, {"b", "nurse"}, {"c", "doctor"}, {"d", "nurse"}};
  const LabelMap preds = {{"a", "nurse"}, {"b", "doctor"}, {"c", "nurse"}, {"d", "nurse"}};
  const std::vector<Neighbor> neighbors = {{"a", 0.1}, {"b", 0.2}, {"c", 0.3}, {"d", 0.4}};
  EXPECT_DOUBLE_EQ(perplexity(neighbors, "nurse", truth, preds), 0.5);
  EXPECT_DOUBLE_EQ(perplexity(neighbors, "pilot", truth, preds), 0.0);
}

TEST(Perplexity, Errors) {
  const LabelMap truth = {{"a", "nurse"}};
  EXPECT_WEAKSPOT_ERROR(perplexity({}, "nurse", truth, truth), ErrorCode::NoNeighbors);
  const std::vector<Neighbor> neighbors = {{"a", 0.1}};
  EXPECT_WEAKSPOT_ERROR(perplexity(neighbors, "nurse", truth, {}), ErrorCode::MissingPrediction);
}

TEST(Detect, FindsThePivotalInsideAConfidentCluster) {
  const auto s = nurse_cluster();
  const auto index = index_all(s.bundle);
  const auto found = detect(s.bundle, s.predictions, index, config_at(1.0, 0.7));
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].pivotal_id, "doc-pivot");
  EXPECT_EQ(found[0].true_class, "doctor");
  EXPECT_EQ(found[0].predicted_class, "nurse");
  EXPECT_DOUBLE_EQ(found[0].perplexity, 1.0);
  EXPECT_EQ(found[0].neighbor_ids.size(), 6u);
}

TEST(Detect, ThresholdComparisonIsInclusive) {
  // Four of six neighbours are confident nurses: perplexity 2/3.
  const auto s = nurse_cluster(4);
  const auto index = index_all(s.bundle);
  EXPECT_EQ(detect(s.bundle, s.predictions, index, config_at(1.0, 4.0 / 6.0)).size(), 1u);
  EXPECT_EQ(detect(s.bundle, s.predictions, index, config_at(1.0, 0.7)).size(), 0u);
}

TEST(Detect, TooFewNeighboursIsNotAWeakspot) {
  const auto s = nurse_cluster();
  const auto index = index_all(s.bundle);
  EXPECT_TRUE(detect(s.bundle, s.predictions, index, config_at(1.0, 0.7, 7)).empty());
  EXPECT_TRUE(detect(s.bundle, s.predictions, index, config_at(0.1, 0.7)).empty());
}

TEST(Detect, NoMisclassificationsMeansNoWeakspots) {
  const auto bundle = random_bundle(3, 120, 4, 3);
  const auto index = index_all(bundle);
  EXPECT_TRUE(detect(bundle, truth_map(bundle), index, config_at(10.0, 0.0, 1)).empty());
}

TEST(Detect, RequiresPredictionsForTheWholeReference) {
  auto s = nurse_cluster();
  s.predictions.erase("doc-3");
  const auto index = index_all(s.bundle);
  EXPECT_WEAKSPOT_ERROR(detect(s.bundle, s.predictions, index, config_at(1.0, 0.7)),
                        ErrorCode::MissingPrediction);
}

TEST(Detect, ValidatesConfig) {
  const auto s = nurse_cluster();
  const auto index = index_all(s.bundle);
  EXPECT_WEAKSPOT_ERROR(detect(s.bundle, s.predictions, index, config_at(1.0, 1.5)), ErrorCode::InvalidConfig);
  EXPECT_WEAKSPOT_ERROR(detect(s.bundle, s.predictions, index, config_at(-1.0, 0.5)), ErrorCode::InvalidConfig);
}

TEST(Detect, OrdersByPerplexityThenId) {
  const auto bundle = random_bundle(11, 300, 2, 2, 3.0);
  const auto preds = random_predictions(bundle, 5, 0.6);
  const auto found = detect(bundle, preds, index_all(bundle), config_at(2.0, 0.2, 3));
  ASSERT_GT(found.size(), 2u);
  for (std::size_t i = 1; i < found.size(); ++i) {
    const auto& a = found[i - 1];
    const auto& b = found[i];
    EXPECT_TRUE(a.perplexity > b.perplexity || (a.perplexity == b.perplexity && a.pivotal_id < b.pivotal_id));
  }
}

// Property: detection agrees with an exhaustive pairwise oracle.
TEST(DetectProperty, MatchesPairwiseOracle) {
  std::size_t non_empty = 0;
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    Gen gen(seed);
    const auto bundle = random_bundle(seed, 80 + gen.below(120), 2 + gen.below(2), 2, 3.0);
    const auto preds = random_predictions(bundle, seed * 7, 0.3 + 0.6 * gen.uniform());
    AuditConfig config = config_at(1.0 + 3.0 * gen.uniform(), 0.6 * gen.uniform(), 1 + gen.below(6));
    config.k = 5 + gen.below(60);
    const auto got = detect(bundle, preds, index_all(bundle), config);
    EXPECT_EQ(sorted_ids(got), oracle_pivotals(bundle, preds, config)) << "seed " << seed;
    non_empty += got.empty() ? 0 : 1;
  }
  EXPECT_GT(non_empty, 3u);
}

// Property: raising the threshold never adds weakspots.
TEST(DetectProperty, ThresholdMonotonicity) {
  std::size_t strict_subsets = 0, strict_total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto bundle = random_bundle(seed, 250, 2, 2, 3.0);
    const auto preds = seed % 2 ? centroid_predictions(bundle) : random_predictions(bundle, seed + 50, 0.5);
    const auto index = index_all(bundle);
    const auto low = sorted_ids(detect(bundle, preds, index, config_at(3.0, 0.5, 2)));
    const auto high = sorted_ids(detect(bundle, preds, index, config_at(3.0, 0.9, 2)));
    EXPECT_TRUE(std::includes(low.begin(), low.end(), high.begin(), high.end())) << "seed " << seed;
    if (high.size() < low.size()) ++strict_subsets;
    strict_total += high.size();
  }
  EXPECT_GT(strict_subsets, 0u) << "generator never separates the two thresholds";
  EXPECT_GT(strict_total, 0u) << "the stricter threshold never fires";
}

TEST(Grid, RowsMatchDetectAtEachRadius) {
  const auto bundle = random_bundle(21, 200, 3, 3, 1.2);
  const auto preds = random_predictions(bundle, 4, 0.5);
  const auto index = index_all(bundle);
  const std::vector<double> d_values = {0.5, 1.0, 2.0, 4.0};
  AuditConfig base = config_at(0.0, 0.0, 2);
  const auto report = grid(bundle, preds, index, d_values, 0.4, base);
  ASSERT_EQ(report.rows.size(), d_values.size());
  for (std::size_t i = 0; i < d_values.size(); ++i) {
    const auto direct = detect(bundle, preds, index, config_at(d_values[i], 0.4, 2));
    EXPECT_EQ(report.rows[i].radius, d_values[i]);
    EXPECT_EQ(report.rows[i].perplexity_threshold, 0.4);
    EXPECT_EQ(report.rows[i].weakspot_count, direct.size());
    std::vector<std::string> ids;
    for (const auto& w : direct) ids.push_back(w.pivotal_id);
    EXPECT_EQ(report.rows[i].pivotal_ids, ids);
  }
  EXPECT_WEAKSPOT_ERROR(grid(bundle, preds, index, {}, 0.4, base), ErrorCode::InvalidArgument);
}

TEST(PairSummary, GroupsByTrueAndPredictedClass) {
  std::vector<Weakspot> ws(3);
  ws[0] = {"a", "doctor", "nurse", 1.0, 0.9, {}};
  ws[1] = {"b", "doctor", "nurse", 1.0, 0.8, {}};
  ws[2] = {"c", "nurse", "doctor", 1.0, 0.8, {}};
  const auto summary = pair_summary(ws);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary.at({"doctor", "nurse"}).count, 2u);
  EXPECT_EQ(summary.at({"doctor", "nurse"}).pivotal_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(summary.at({"nurse", "doctor"}).count, 1u);
}

TEST(AuditJson, WeakspotAndConfigRoundTrip) {
  const Weakspot w{"x", "doctor", "nurse", 2.5, 0.75, {"n1", "n2"}};
  EXPECT_EQ(weakspot_from_json(to_json(w)), w);
  AuditConfig c = config_at(3.5, 0.6, 4);
  c.k = 42;
  c.reference = ReferenceSet::all;
  const auto back = audit_config_from_json(to_json(c));
  EXPECT_EQ(back.k, 42u);
  EXPECT_EQ(back.radius, 3.5);
  EXPECT_EQ(back.perplexity_threshold, 0.6);
  EXPECT_EQ(back.min_neighbors, 4u);
  EXPECT_EQ(back.reference, ReferenceSet::all);
}
