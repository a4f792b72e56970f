#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weakspot/core_data.hpp"

namespace weakspot {

struct Neighbor {
  std::string id;
  double distance = 0.0;  // euclidean

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exact L2 search over a snapshot of selected bundle rows.
///
/// Results are ordered by ascending distance with ties broken by ascending id,
/// so every query has a single well-defined answer.
class NeighborIndex {
 public:
  static NeighborIndex build(const DatasetBundle& bundle,
                             const std::function<bool(const Record&)>& selector);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const float> vector(std::size_t i) const;

  std::vector<Neighbor> top_k(std::span<const float> query, std::size_t k,
                              std::optional<std::string_view> exclude_id = std::nullopt) const;

  /// top_k(query, k_cap, exclude_id) restricted to distance <= radius.
  std::vector<Neighbor> within_radius(std::span<const float> query, double radius,
                                      std::size_t k_cap,
                                      std::optional<std::string_view> exclude_id = std::nullopt) const;

 private:
  NeighborIndex(std::size_t dim) : dim_(dim) {}

  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> vectors_;
};

}  // namespace weakspot
