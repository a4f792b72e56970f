#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weakspot/core_data.hpp"
#include "weakspot/weakspot_audit.hpp"

namespace weakspot {

template <typename T>
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<T> values;  // row-major

  const T& at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

using Heatmap = Raster<double>;               // relevance in [0,1]
using SegmentationMask = Raster<std::uint32_t>;  // 0 = background
using LabelTable = std::map<std::uint32_t, std::string>;

Heatmap heatmap_from_json(const Json& j);
SegmentationMask mask_from_json(const Json& j);
LabelTable label_table_from_json(const Json& j);

struct ObjectRelevance {
  std::uint32_t object_id = 0;
  std::string object_label;
  double mean_relevance = 0.0;
  std::size_t pixel_count = 0;
};

/// Mean heatmap value over each labelled segment, background excluded.
/// Sorted by descending mean, then ascending object id.
std::vector<ObjectRelevance> object_relevance(const Heatmap& heatmap, const SegmentationMask& mask,
                                              const LabelTable& labels);

/// Object metadata for a record derived from its rasters. Segments sharing a
/// label collapse to their highest mean.
std::vector<DetectedObject> objects_from_rasters(const Heatmap& heatmap,
                                                 const SegmentationMask& mask,
                                                 const LabelTable& labels);

struct AssociationKey {
  std::string object_label;
  std::string predicted_class;

  auto operator<=>(const AssociationKey&) const = default;
};

struct Association {
  std::string object_label;
  std::string predicted_class;
  std::size_t support = 0;
  double mean_relevance = 0.0;
  std::vector<std::string> evidence_ids;

  AssociationKey key() const { return {object_label, predicted_class}; }
  friend bool operator==(const Association&, const Association&) = default;
};

inline constexpr double kDefaultRelevanceThreshold = 0.5;

/// Associations (object, predicted class) for every record holding an object
/// at or above `relevance_threshold`. Records without a prediction are
/// skipped. Sorted by descending support, then key.
std::vector<Association> mine(std::span<const Record> records, const LabelMap& predictions,
                              double relevance_threshold = kDefaultRelevanceThreshold);

enum class Verdict { pending, spurious, benign };

std::string_view to_string(Verdict verdict);
Verdict parse_verdict(std::string_view text);

struct VerdictEvent {
  Verdict verdict = Verdict::pending;
  std::string reviewer;
  std::string timestamp;

  friend bool operator==(const VerdictEvent&, const VerdictEvent&) = default;
};

struct ReviewItem {
  AssociationKey key;
  Association association;
  Verdict verdict = Verdict::pending;
  std::vector<VerdictEvent> history;

  friend bool operator==(const ReviewItem&, const ReviewItem&) = default;
};

/// Pending review items for associations evidenced by a pivotal record or
/// by one of its weakspot neighbours. Preserves the associations' order.
std::vector<ReviewItem> shortlist(std::span<const Association> associations,
                                  std::span<const Weakspot> weakspots);

/// Verdict implied by replaying `history` from pending.
Verdict replay(std::span<const VerdictEvent> history);

class ReviewQueue {
 public:
  ReviewQueue() = default;
  explicit ReviewQueue(std::vector<ReviewItem> items);

  const std::vector<ReviewItem>& items() const noexcept { return items_; }
  const ReviewItem* find(const AssociationKey& key) const;

  void set_verdict(const AssociationKey& key, Verdict verdict, const std::string& reviewer,
                   const std::string& timestamp);

  /// Replaces the shortlist while keeping verdicts and history of keys that
  /// were already reviewed. Previously reviewed keys missing from the new
  /// shortlist are kept at the end.
  void refresh(std::vector<ReviewItem> shortlisted);

  std::vector<Association> spurious() const;

 private:
  std::vector<ReviewItem> items_;
};

Json to_json(const Association& association);
Association association_from_json(const Json& j);
Json to_json(const ReviewItem& item);
ReviewItem review_item_from_json(const Json& j);
Json to_json(const ReviewQueue& queue);
ReviewQueue review_queue_from_json(const Json& j);

/// File-backed review queue. Writes are serialised and persisted with an
/// atomic replace; readers get a snapshot of the last persisted state.
class ReviewStore {
 public:
  explicit ReviewStore(std::filesystem::path path);

  ReviewQueue snapshot() const;
  void set_verdict(const AssociationKey& key, Verdict verdict, const std::string& reviewer,
                   const std::string& timestamp = {});
  void refresh(std::vector<ReviewItem> shortlisted);

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  ReviewQueue queue_;
};

ReviewQueue load_review_queue(const std::filesystem::path& path);
void save_review_queue(const ReviewQueue& queue, const std::filesystem::path& path);

}  // namespace weakspot
