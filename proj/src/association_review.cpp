#include "weakspot/association_review.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "weakspot/error.hpp"
#include "weakspot/io.hpp"

namespace weakspot {

namespace {

template <typename T>
Raster<T> raster_from_json(const Json& j, const char* what) {
  Raster<T> raster;
  try {
    raster.width = j.at("width").get<std::size_t>();
    raster.height = j.at("height").get<std::size_t>();
    for (const auto& v : j.at("values")) {
      if (v.is_array()) {
        for (const auto& inner : v) raster.values.push_back(inner.get<T>());
      } else {
        raster.values.push_back(v.get<T>());
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
  if (raster.width == 0 || raster.height == 0) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " dimensions must be positive");
  }
  if (raster.values.size() != raster.width * raster.height) {
    throw Error(ErrorCode::LengthMismatch,
                std::string(what) + " holds " + std::to_string(raster.values.size()) +
                    " values for " + std::to_string(raster.width) + "x" +
                    std::to_string(raster.height));
  }
  return raster;
}

}  // namespace

Heatmap heatmap_from_json(const Json& j) {
  auto heatmap = raster_from_json<double>(j, "heatmap");
  for (double v : heatmap.values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "heatmap value outside [0,1]");
    }
  }
  return heatmap;
}

SegmentationMask mask_from_json(const Json& j) { return raster_from_json<std::uint32_t>(j, "mask"); }

LabelTable label_table_from_json(const Json& j) {
  LabelTable table;
  try {
    for (const auto& [key, value] : j.items()) {
      table[static_cast<std::uint32_t>(std::stoul(key))] = value.get<std::string>();
    }
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("label table: ") + e.what());
  }
  return table;
}

std::vector<ObjectRelevance> object_relevance(const Heatmap& heatmap, const SegmentationMask& mask,
                                              const LabelTable& labels) {
  if (heatmap.width != mask.width || heatmap.height != mask.height ||
      heatmap.values.size() != mask.values.size()) {
    throw Error(ErrorCode::DimMismatch, "heatmap and mask dimensions differ");
  }
  struct Accumulator {
    double sum = 0.0;
    std::size_t pixels = 0;
  };
  std::map<std::uint32_t, Accumulator> segments;
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    const auto object_id = mask.values[i];
    if (object_id == 0) continue;
    auto& acc = segments[object_id];
    acc.sum += heatmap.values[i];
    ++acc.pixels;
  }

  std::vector<ObjectRelevance> result;
  result.reserve(segments.size());
  for (const auto& [object_id, acc] : segments) {
    auto label = labels.find(object_id);
    if (label == labels.end()) {
      throw Error(ErrorCode::UnknownObjectId,
                  "mask id " + std::to_string(object_id) + " has no label");
    }
    result.push_back({object_id, label->second, acc.sum / static_cast<double>(acc.pixels),
                      acc.pixels});
  }
  std::stable_sort(result.begin(), result.end(), [](const auto& a, const auto& b) {
    return a.mean_relevance > b.mean_relevance;
  });
  return result;
}

std::vector<DetectedObject> objects_from_rasters(const Heatmap& heatmap,
                                                 const SegmentationMask& mask,
                                                 const LabelTable& labels) {
  std::vector<DetectedObject> objects;
  for (const auto& segment : object_relevance(heatmap, mask, labels)) {
    auto it = std::find_if(objects.begin(), objects.end(),
                           [&](const auto& o) { return o.label == segment.object_label; });
    if (it == objects.end()) {
      objects.push_back({segment.object_label, segment.mean_relevance});
    }
  }
  return objects;
}

std::vector<Association> mine(std::span<const Record> records, const LabelMap& predictions,
                              double relevance_threshold) {
  struct Group {
    double relevance_sum = 0.0;
    std::vector<std::string> evidence;
  };
  std::map<AssociationKey, Group> groups;

  for (const auto& record : records) {
    auto predicted = predictions.find(record.id);
    if (predicted == predictions.end()) continue;
    if (!record.objects) {
      throw Error(ErrorCode::MissingObjects, "record '" + record.id + "' has no object metadata");
    }
    // Highest relevance per label within this record.
    std::map<std::string, double> strongest;
    for (const auto& object : *record.objects) {
      auto [it, inserted] = strongest.emplace(object.label, object.relevance);
      if (!inserted) it->second = std::max(it->second, object.relevance);
    }
    for (const auto& [label, relevance] : strongest) {
      if (relevance < relevance_threshold) continue;
      auto& group = groups[{label, predicted->second}];
      group.relevance_sum += relevance;
      group.evidence.push_back(record.id);
    }
  }

  std::vector<Association> associations;
  associations.reserve(groups.size());
  for (auto& [key, group] : groups) {
    const auto support = group.evidence.size();
    associations.push_back({key.object_label, key.predicted_class, support,
                            group.relevance_sum / static_cast<double>(support),
                            std::move(group.evidence)});
  }
  std::stable_sort(associations.begin(), associations.end(),
                   [](const auto& a, const auto& b) { return a.support > b.support; });
  return associations;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pending: return "pending";
    case Verdict::spurious: return "spurious";
    case Verdict::benign: return "benign";
  }
  return "pending";
}

Verdict parse_verdict(std::string_view text) {
  if (text == "pending") return Verdict::pending;
  if (text == "spurious") return Verdict::spurious;
  if (text == "benign") return Verdict::benign;
  throw Error(ErrorCode::InvalidArgument, "unknown verdict '" + std::string(text) + "'");
}

std::vector<ReviewItem> shortlist(std::span<const Association> associations,
                                  std::span<const Weakspot> weakspots) {
  std::unordered_set<std::string> flagged;
  for (const auto& w : weakspots) {
    flagged.insert(w.pivotal_id);
    flagged.insert(w.neighbor_ids.begin(), w.neighbor_ids.end());
  }
  std::vector<ReviewItem> items;
  for (const auto& association : associations) {
    const bool touches = std::any_of(association.evidence_ids.begin(),
                                     association.evidence_ids.end(),
                                     [&](const auto& id) { return flagged.contains(id); });
    if (touches) items.push_back({association.key(), association, Verdict::pending, {}});
  }
  return items;
}

Verdict replay(std::span<const VerdictEvent> history) {
  return history.empty() ? Verdict::pending : history.back().verdict;
}

ReviewQueue::ReviewQueue(std::vector<ReviewItem> items) : items_(std::move(items)) {
  std::set<AssociationKey> seen;
  for (const auto& item : items_) {
    if (!seen.insert(item.key).second) {
      throw Error(ErrorCode::DuplicateId,
                  "review key (" + item.key.object_label + ", " + item.key.predicted_class +
                      ") repeated");
    }
  }
}

const ReviewItem* ReviewQueue::find(const AssociationKey& key) const {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const auto& i) { return i.key == key; });
  return it == items_.end() ? nullptr : &*it;
}

void ReviewQueue::set_verdict(const AssociationKey& key, Verdict verdict,
                              const std::string& reviewer, const std::string& timestamp) {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const auto& i) { return i.key == key; });
  if (it == items_.end()) {
    throw Error(ErrorCode::UnknownKey,
                "no review item (" + key.object_label + ", " + key.predicted_class + ")");
  }
  it->history.push_back({verdict, reviewer, timestamp});
  it->verdict = verdict;
}

void ReviewQueue::refresh(std::vector<ReviewItem> shortlisted) {
  std::vector<ReviewItem> next;
  next.reserve(shortlisted.size());
  std::set<AssociationKey> present;
  for (auto& item : shortlisted) {
    if (const auto* previous = find(item.key)) {
      item.verdict = previous->verdict;
      item.history = previous->history;
    }
    present.insert(item.key);
    next.push_back(std::move(item));
  }
  for (const auto& item : items_) {
    if (!present.contains(item.key) && !item.history.empty()) next.push_back(item);
  }
  items_ = std::move(next);
}

std::vector<Association> ReviewQueue::spurious() const {
  std::vector<Association> out;
  for (const auto& item : items_) {
    if (item.verdict == Verdict::spurious) out.push_back(item.association);
  }
  return out;
}

Json to_json(const Association& a) {
  return {{"object_label", a.object_label},
          {"predicted_class", a.predicted_class},
          {"support", a.support},
          {"mean_relevance", a.mean_relevance},
          {"evidence_ids", a.evidence_ids}};
}

Association association_from_json(const Json& j) {
  try {
    Association a;
    a.object_label = j.at("object_label").get<std::string>();
    a.predicted_class = j.at("predicted_class").get<std::string>();
    a.support = j.at("support").get<std::size_t>();
    a.mean_relevance = j.at("mean_relevance").get<double>();
    a.evidence_ids = j.at("evidence_ids").get<std::vector<std::string>>();
    if (a.support != a.evidence_ids.size()) {
      throw Error(ErrorCode::ParseError, "association support does not match evidence");
    }
    return a;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("association: ") + e.what());
  }
}

Json to_json(const ReviewItem& item) {
  Json history = Json::array();
  for (const auto& event : item.history) {
    history.push_back({{"verdict", to_string(event.verdict)},
                       {"reviewer", event.reviewer},
                       {"timestamp", event.timestamp}});
  }
  return {{"key", {{"object_label", item.key.object_label},
                   {"predicted_class", item.key.predicted_class}}},
          {"association", to_json(item.association)},
          {"verdict", to_string(item.verdict)},
          {"history", std::move(history)}};
}

ReviewItem review_item_from_json(const Json& j) {
  try {
    ReviewItem item;
    item.key = {j.at("key").at("object_label").get<std::string>(),
                j.at("key").at("predicted_class").get<std::string>()};
    item.association = association_from_json(j.at("association"));
    item.verdict = parse_verdict(j.at("verdict").get<std::string>());
    for (const auto& event : j.at("history")) {
      item.history.push_back({parse_verdict(event.at("verdict").get<std::string>()),
                              event.at("reviewer").get<std::string>(),
                              event.at("timestamp").get<std::string>()});
    }
    if (item.verdict != replay(item.history)) {
      throw Error(ErrorCode::ParseError, "verdict disagrees with its history for (" +
                                             item.key.object_label + ", " +
                                             item.key.predicted_class + ")");
    }
    return item;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("review item: ") + e.what());
  }
}

Json to_json(const ReviewQueue& queue) {
  Json out = Json::array();
  for (const auto& item : queue.items()) out.push_back(to_json(item));
  return out;
}

ReviewQueue review_queue_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "review state must be a JSON array");
  std::vector<ReviewItem> items;
  for (const auto& entry : j) items.push_back(review_item_from_json(entry));
  return ReviewQueue(std::move(items));
}

ReviewQueue load_review_queue(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  try {
    return review_queue_from_json(Json::parse(io::read_file(path)));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void save_review_queue(const ReviewQueue& queue, const std::filesystem::path& path) {
  io::write_file_atomic(path, to_json(queue).dump(2) + "\n");
}

ReviewStore::ReviewStore(std::filesystem::path path)
    : path_(std::move(path)), queue_(load_review_queue(path_)) {}

ReviewQueue ReviewStore::snapshot() const {
  std::lock_guard lock(mutex_);
  return queue_;
}

void ReviewStore::set_verdict(const AssociationKey& key, Verdict verdict,
                              const std::string& reviewer, const std::string& timestamp) {
  std::lock_guard lock(mutex_);
  ReviewQueue next = queue_;
  next.set_verdict(key, verdict, reviewer, timestamp.empty() ? io::utc_timestamp_now() : timestamp);
  save_review_queue(next, path_);
  queue_ = std::move(next);
}

void ReviewStore::refresh(std::vector<ReviewItem> shortlisted) {
  std::lock_guard lock(mutex_);
  ReviewQueue next = queue_;
  next.refresh(std::move(shortlisted));
  save_review_queue(next, path_);
  queue_ = std::move(next);
}

}  // namespace weakspot
