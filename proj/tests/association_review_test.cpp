#include <set>
#include <thread>

#include "support.hpp"
#include "weakspot/association_review.hpp"
#include "weakspot/io.hpp"

using namespace weakspot;
using namespace weakspot::testing;

namespace {

Record with_objects(std::string id, std::vector<DetectedObject> objects) {
  Record r;
  r.id = std::move(id);
  r.true_class = "x";
  r.objects = std::move(objects);
  return r;
}

Association association(std::string object, std::string cls, std::vector<std::string> evidence) {
  Association a;
  a.object_label = std::move(object);
  a.predicted_class = std::move(cls);
  a.support = evidence.size();
  a.mean_relevance = 0.8;
  a.evidence_ids = std::move(evidence);
  return a;
}

Weakspot weakspot_at(std::string pivotal, std::vector<std::string> neighbors) {
  return {std::move(pivotal), "doctor", "nurse", 1.0, 0.9, std::move(neighbors)};
}

}  // namespace

TEST(ObjectRelevance, AveragesHeatmapOverEachSegment) {
  const auto heatmap = heatmap_from_json(Json::parse(R"({"width":3,"height":2,
      "values":[[0.9,0.7,0.1],[0.5,0.2,0.0]]})"));
  const auto mask = mask_from_json(Json::parse(R"({"width":3,"height":2,"values":[1,1,0,2,2,2]})"));
  const auto labels = label_table_from_json(Json::parse(R"({"1":"potted_plant","2":"person"})"));
  const auto got = object_relevance(heatmap, mask, labels);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].object_label, "potted_plant");
  EXPECT_NEAR(got[0].mean_relevance, 0.8, 1e-12);
  EXPECT_EQ(got[0].pixel_count, 2u);
  EXPECT_NEAR(got[1].mean_relevance, 0.7 / 3.0, 1e-12);
}

// Property: segment means equal a per-pixel accumulation done independently.
TEST(ObjectRelevanceProperty, MatchesPixelAccumulation) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Gen gen(seed);
    const std::size_t w = 1 + gen.below(20), h = 1 + gen.below(20), objects = 1 + gen.below(5);
    Heatmap heatmap{w, h, {}};
    SegmentationMask mask{w, h, {}};
    LabelTable labels;
    for (std::uint32_t o = 1; o <= objects; ++o) labels[o] = "obj" + std::to_string(o);
    std::map<std::uint32_t, std::pair<double, std::size_t>> expected;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double v = gen.uniform();
        const auto id = static_cast<std::uint32_t>(gen.below(objects + 1));
        heatmap.values.push_back(v);
        mask.values.push_back(id);
        if (id != 0) {
          expected[id].first += heatmap.at(x, y);
          ++expected[id].second;
        }
      }
    }
    const auto got = object_relevance(heatmap, mask, labels);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      const auto& [sum, count] = expected.at(got[i].object_id);
      EXPECT_NEAR(got[i].mean_relevance, sum / static_cast<double>(count), 1e-12);
      EXPECT_EQ(got[i].pixel_count, count);
      if (i > 0) {
        EXPECT_TRUE(got[i - 1].mean_relevance > got[i].mean_relevance ||
                    (got[i - 1].mean_relevance == got[i].mean_relevance && got[i - 1].object_id < got[i].object_id));
      }
    }
  }
}

TEST(ObjectRelevance, Errors) {
  Heatmap heatmap{2, 1, {0.5, 0.5}};
  SegmentationMask mask{1, 2, {1, 1}};
  EXPECT_WEAKSPOT_ERROR(object_relevance(heatmap, mask, {{1, "a"}}), ErrorCode::DimMismatch);
  SegmentationMask unknown{2, 1, {1, 3}};
  EXPECT_WEAKSPOT_ERROR(object_relevance(heatmap, unknown, {{1, "a"}}), ErrorCode::UnknownObjectId);
  EXPECT_WEAKSPOT_ERROR(heatmap_from_json(Json::parse(R"({"width":1,"height":1,"values":[1.5]})")),
                        ErrorCode::InvalidArgument);
  EXPECT_WEAKSPOT_ERROR(mask_from_json(Json::parse(R"({"width":2,"height":2,"values":[1,2,3]})")),
                        ErrorCode::LengthMismatch);
}

TEST(ObjectsFromRasters, SharedLabelsKeepTheirStrongestSegment) {
  Heatmap heatmap{4, 1, {0.9, 0.1, 0.3, 0.3}};
  SegmentationMask mask{4, 1, {1, 2, 3, 3}};
  const auto objects = objects_from_rasters(heatmap, mask, {{1, "chair"}, {2, "chair"}, {3, "lamp"}});
  ASSERT_EQ(objects.size(), 2u);
  EXPECT_EQ(objects[0], (DetectedObject{"chair", 0.9}));
  EXPECT_EQ(objects[1], (DetectedObject{"lamp", 0.3}));
}

TEST(Mine, GroupsByObjectAndPredictedClass) {
  const std::vector<Record> records = {
      with_objects("a", {{"potted_plant", 0.9}, {"person", 0.4}}),
      with_objects("b", {{"potted_plant", 0.7}, {"potted_plant", 0.2}}),
      with_objects("c", {{"potted_plant", 0.6}}),
      with_objects("d", {{"rake", 0.5}}),
      with_objects("unpredicted", {{"potted_plant", 0.9}}),
  };
  const LabelMap preds = {{"a", "gardener"}, {"b", "gardener"}, {"c", "doctor"}, {"d", "gardener"}};
  const auto got = mine(records, preds, 0.5);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].key(), (AssociationKey{"potted_plant", "gardener"}));
  EXPECT_EQ(got[0].support, 2u);
  EXPECT_NEAR(got[0].mean_relevance, 0.8, 1e-12);
  EXPECT_EQ(got[0].evidence_ids, (std::vector<std::string>{"a", "b"}));
  // Equal support orders by key.
  EXPECT_EQ(got[1].key(), (AssociationKey{"potted_plant", "doctor"}));
  EXPECT_EQ(got[2].key(), (AssociationKey{"rake", "gardener"}));
}

TEST(Mine, ThresholdIsInclusiveAndObjectsAreRequired) {
  const std::vector<Record> records = {with_objects("a", {{"rake", 0.5}})};
  const LabelMap preds = {{"a", "gardener"}};
  EXPECT_EQ(mine(records, preds, 0.5).size(), 1u);
  EXPECT_TRUE(mine(records, preds, 0.51).empty());
  Record bare;
  bare.id = "z";
  EXPECT_WEAKSPOT_ERROR(mine(std::vector<Record>{bare}, {{"z", "x"}}), ErrorCode::MissingObjects);
}

// Property: the shortlist is exactly the associations whose evidence meets
// the weakspot id set, computed here by set intersection.
TEST(ShortlistProperty, EqualsEvidenceIntersection) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Gen gen(seed);
    const auto id = [&] { return "r" + std::to_string(gen.below(60)); };
    std::vector<Association> associations;
    for (std::size_t i = 0; i < 12; ++i) {
      std::vector<std::string> evidence;
      for (std::size_t e = 0, n = 1 + gen.below(4); e < n; ++e) evidence.push_back(id());
      associations.push_back(association("obj" + std::to_string(i), "c", evidence));
    }
    std::vector<Weakspot> weakspots;
    std::set<std::string> flagged;
    for (std::size_t w = 0, n = gen.below(4); w < n; ++w) {
      std::vector<std::string> neighbors;
      for (std::size_t e = 0; e < 5; ++e) neighbors.push_back(id());
      weakspots.push_back(weakspot_at(id(), neighbors));
      flagged.insert(weakspots.back().pivotal_id);
      flagged.insert(neighbors.begin(), neighbors.end());
    }
    std::vector<AssociationKey> expected;
    for (const auto& a : associations) {
      std::set<std::string> evidence(a.evidence_ids.begin(), a.evidence_ids.end());
      std::vector<std::string> common;
      std::set_intersection(evidence.begin(), evidence.end(), flagged.begin(), flagged.end(),
                            std::back_inserter(common));
      if (!common.empty()) expected.push_back(a.key());
    }
    std::vector<AssociationKey> got;
    for (const auto& item : shortlist(associations, weakspots)) {
      EXPECT_EQ(item.verdict, Verdict::pending);
      got.push_back(item.key);
    }
    EXPECT_EQ(got, expected) << "seed " << seed;
  }
}

TEST(ReviewQueue, VerdictsAppendHistoryAndReplay) {
  ReviewQueue queue(shortlist(std::vector<Association>{association("potted_plant", "gardener", {"p"})},
                              std::vector<Weakspot>{weakspot_at("p", {})}));
  const AssociationKey key{"potted_plant", "gardener"};
  queue.set_verdict(key, Verdict::spurious, "ana", "2024-01-01T00:00:00Z");
  queue.set_verdict(key, Verdict::benign, "bo", "2024-01-02T00:00:00Z");
  const auto* item = queue.find(key);
  ASSERT_NE(item, nullptr);
  EXPECT_EQ(item->verdict, Verdict::benign);
  EXPECT_EQ(item->history.size(), 2u);
  EXPECT_EQ(replay(item->history), Verdict::benign);
  EXPECT_TRUE(queue.spurious().empty());
  EXPECT_WEAKSPOT_ERROR(queue.set_verdict({"ball", "x"}, Verdict::benign, "a", "t"), ErrorCode::UnknownKey);
}

TEST(ReviewQueue, RefreshKeepsReviewedItems) {
  const auto plant = association("potted_plant", "gardener", {"p"});
  const auto rake = association("rake", "gardener", {"p"});
  const std::vector<Weakspot> weakspots = {weakspot_at("p", {})};
  ReviewQueue queue(shortlist(std::vector<Association>{plant, rake}, weakspots));
  queue.set_verdict(plant.key(), Verdict::spurious, "ana", "t1");

  // The plant association now has more evidence; the rake one vanished.
  auto grown = association("potted_plant", "gardener", {"p", "q"});
  const auto hat = association("hat", "nurse", {"p"});
  queue.refresh(shortlist(std::vector<Association>{hat, grown}, weakspots));
  ASSERT_EQ(queue.items().size(), 2u);
  EXPECT_EQ(queue.items()[0].key, hat.key());
  EXPECT_EQ(queue.items()[1].verdict, Verdict::spurious);
  EXPECT_EQ(queue.items()[1].association.support, 2u);
  EXPECT_EQ(queue.spurious().size(), 1u);

  // Reviewed keys that drop out of the shortlist are retained at the end.
  queue.refresh({});
  ASSERT_EQ(queue.items().size(), 1u);
  EXPECT_EQ(queue.items()[0].key, plant.key());
}

TEST(ReviewQueue, JsonRoundTripAndConsistencyCheck) {
  ReviewQueue queue(shortlist(std::vector<Association>{association("potted_plant", "gardener", {"p"})},
                              std::vector<Weakspot>{weakspot_at("p", {})}));
  queue.set_verdict({"potted_plant", "gardener"}, Verdict::spurious, "ana", "t");
  const auto j = to_json(queue);
  EXPECT_EQ(review_queue_from_json(j).items(), queue.items());

  auto tampered = j;
  tampered[0]["verdict"] = "benign";
  EXPECT_WEAKSPOT_ERROR(review_queue_from_json(tampered), ErrorCode::ParseError);
  EXPECT_WEAKSPOT_ERROR(parse_verdict("maybe"), ErrorCode::InvalidArgument);
}

TEST(ReviewStore, PersistsAcrossInstances) {
  TempDir dir;
  const auto path = dir / "review.json";
  {
    ReviewStore store(path);
    EXPECT_TRUE(store.snapshot().items().empty());
    store.refresh(shortlist(std::vector<Association>{association("potted_plant", "gardener", {"p"})},
                            std::vector<Weakspot>{weakspot_at("p", {})}));
    store.set_verdict({"potted_plant", "gardener"}, Verdict::spurious, "ana");
  }
  ReviewStore reopened(path);
  const auto* item = reopened.snapshot().find({"potted_plant", "gardener"});
  ASSERT_NE(item, nullptr);
  EXPECT_EQ(item->verdict, Verdict::spurious);
  EXPECT_FALSE(item->history[0].timestamp.empty());
}

TEST(ReviewStore, ConcurrentWritesAreSerialised) {
  TempDir dir;
  ReviewStore store(dir / "review.json");
  std::vector<Association> associations;
  for (int i = 0; i < 4; ++i) associations.push_back(association("o" + std::to_string(i), "c", {"p"}));
  store.refresh(shortlist(associations, std::vector<Weakspot>{weakspot_at("p", {})}));
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int n = 0; n < 10; ++n) {
        store.set_verdict({"o" + std::to_string(t), "c"}, n % 2 ? Verdict::benign : Verdict::spurious,
                          "r" + std::to_string(t), "t");
      }
    });
  }
  for (auto& th : threads) th.join();
  const auto persisted = load_review_queue(dir / "review.json");
  for (const auto& item : persisted.items()) {
    EXPECT_EQ(item.history.size(), 10u);
    EXPECT_EQ(item.verdict, Verdict::benign);
  }
}
