#include "weakspot/neighbor_index.hpp"

#include <algorithm>
#include <cmath>

#include "weakspot/error.hpp"

namespace weakspot {

namespace {

constexpr std::size_t kBlockRows = 256;

}  // namespace

NeighborIndex NeighborIndex::build(const DatasetBundle& bundle,
                                   const std::function<bool(const Record&)>& selector) {
  NeighborIndex index(bundle.dim());
  for (std::size_t i = 0; i < bundle.count(); ++i) {
    if (!selector(bundle.records()[i])) continue;
    index.ids_.push_back(bundle.records()[i].id);
    const auto row = bundle.vector(i);
    index.vectors_.insert(index.vectors_.end(), row.begin(), row.end());
  }
  return index;
}

std::span<const float> NeighborIndex::vector(std::size_t i) const {
  return std::span<const float>(vectors_).subspan(i * dim_, dim_);
}

std::vector<Neighbor> NeighborIndex::top_k(std::span<const float> query, std::size_t k,
                                           std::optional<std::string_view> exclude_id) const {
  if (query.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.size()) +
                                            " against index dim " + std::to_string(dim_));
  }
  if (k == 0) {
    throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  }

  const std::size_t n = ids_.size();
  std::vector<double> squared(n, 0.0);
  for (std::size_t block = 0; block < n; block += kBlockRows) {
    const std::size_t end = std::min(n, block + kBlockRows);
    for (std::size_t i = block; i < end; ++i) {
      const float* row = vectors_.data() + i * dim_;
      double acc = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const double diff = static_cast<double>(row[d]) - static_cast<double>(query[d]);
        acc += diff * diff;
      }
      squared[i] = acc;
    }
  }

  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude_id && ids_[i] == *exclude_id) continue;
    order.push_back(i);
  }
  const auto closer = [&](std::size_t a, std::size_t b) {
    if (squared[a] != squared[b]) return squared[a] < squared[b];
    return ids_[a] < ids_[b];
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    closer);

  std::vector<Neighbor> result;
  result.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    result.push_back({ids_[order[r]], std::sqrt(squared[order[r]])});
  }
  return result;
}

std::vector<Neighbor> NeighborIndex::within_radius(std::span<const float> query, double radius,
                                                   std::size_t k_cap,
                                                   std::optional<std::string_view> exclude_id) const {
  if (!(radius >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "radius must be non-negative");
  }
  auto neighbors = top_k(query, k_cap, exclude_id);
  std::erase_if(neighbors, [radius](const Neighbor& n) { return n.distance > radius; });
  return neighbors;
}

}  // namespace weakspot
