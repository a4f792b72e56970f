#pragma once

// Generators and oracles shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "weakspot/core_data.hpp"
#include "weakspot/error.hpp"
#include "weakspot/learner_metrics.hpp"
#include "weakspot/neighbor_index.hpp"
#include "weakspot/random.hpp"
#include "weakspot/weakspot_audit.hpp"

namespace weakspot::testing {

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "weakspot-XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Small deterministic generator for hand-rolled property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : stream_(random::mix(seed)) {}
  double uniform() { return stream_.uniform(counter_++); }
  double normal() { return stream_.normal(counter_++); }
  std::size_t below(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

 private:
  random::CounterStream stream_;
  std::uint64_t counter_ = 0;
};

inline std::string label_of(std::size_t c) { return "c" + std::to_string(c); }

inline std::string id_of(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%04zu", i);
  return buf;
}

/// n gaussian points around `classes` random centres.
inline DatasetBundle random_bundle(std::uint64_t seed, std::size_t n, std::size_t dim,
                                   std::size_t classes, double spread = 1.0) {
  Gen gen(seed);
  std::vector<std::vector<double>> centres(classes, std::vector<double>(dim));
  for (auto& c : centres) {
    for (auto& v : c) v = 3.0 * gen.normal();
  }
  EmbeddingStore store(dim);
  std::vector<Record> records;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % classes;
    std::vector<float> row(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      row[d] = static_cast<float>(centres[cls][d] + spread * gen.normal());
    }
    store.append(row);
    Record r;
    r.id = id_of(i);
    r.split = Split::test;
    r.true_class = label_of(cls);
    records.push_back(std::move(r));
  }
  return bind_records(std::move(store), std::move(records));
}

/// Predictions that keep the truth with probability `accuracy`, otherwise a
/// uniformly chosen other class.
inline LabelMap random_predictions(const DatasetBundle& bundle, std::uint64_t seed,
                                   double accuracy) {
  Gen gen(seed);
  const auto& vocab = bundle.vocabulary();
  LabelMap out;
  for (const auto& r : bundle.records()) {
    if (gen.uniform() <= accuracy || vocab.size() == 1) {
      out[r.id] = r.true_class;
    } else {
      const std::size_t truth = vocab.index_of(r.true_class);
      const std::size_t shift = 1 + gen.below(vocab.size() - 1);
      out[r.id] = vocab.label((truth + shift) % vocab.size());
    }
  }
  return out;
}

/// Nearest-class-mean predictions: errors land where another class dominates,
/// which is the clustered structure weakspots describe.
inline LabelMap centroid_predictions(const DatasetBundle& bundle) {
  const auto& vocab = bundle.vocabulary();
  const std::size_t dim = bundle.dim();
  std::vector<std::vector<double>> means(vocab.size(), std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(vocab.size(), 0);
  for (std::size_t i = 0; i < bundle.count(); ++i) {
    const std::size_t c = vocab.index_of(bundle.records()[i].true_class);
    const auto v = bundle.vector(i);
    for (std::size_t d = 0; d < dim; ++d) means[c][d] += v[d];
    ++counts[c];
  }
  for (std::size_t c = 0; c < means.size(); ++c) {
    for (auto& m : means[c]) m /= static_cast<double>(std::max<std::size_t>(1, counts[c]));
  }
  LabelMap out;
  for (std::size_t i = 0; i < bundle.count(); ++i) {
    const auto v = bundle.vector(i);
    std::size_t best = 0;
    double best_sq = INFINITY;
    for (std::size_t c = 0; c < means.size(); ++c) {
      double sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) sq += (v[d] - means[c][d]) * (v[d] - means[c][d]);
      if (sq < best_sq) best_sq = sq, best = c;
    }
    out[bundle.records()[i].id] = vocab.label(best);
  }
  return out;
}

/// Exhaustive scan in double precision, ordered by (distance, id).
inline std::vector<Neighbor> scan_neighbors(const DatasetBundle& bundle,
                                            std::span<const float> query, std::size_t k,
                                            const std::string& exclude = {}) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < bundle.count(); ++i) {
    const auto& id = bundle.records()[i].id;
    if (id == exclude) continue;
    double sq = 0.0;
    const auto v = bundle.vector(i);
    for (std::size_t d = 0; d < query.size(); ++d) {
      const double diff = static_cast<double>(v[d]) - static_cast<double>(query[d]);
      sq += diff * diff;
    }
    all.emplace_back(sq, id);
  }
  std::sort(all.begin(), all.end());
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) {
    out.push_back({all[i].second, std::sqrt(all[i].first)});
  }
  return out;
}

inline NeighborIndex index_all(const DatasetBundle& bundle) {
  return NeighborIndex::build(bundle, [](const Record&) { return true; });
}

inline LinearClassifier random_classifier(Gen& gen, std::size_t classes, std::size_t dim, double l2) {
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) labels.push_back(label_of(c));
  std::vector<double> w(classes * dim), b(classes);
  for (auto& v : w) v = gen.normal();
  for (auto& v : b) v = gen.normal();
  return LinearClassifier(ClassVocabulary(labels), dim, l2, w, b);
}

inline LabeledBatch random_batch(Gen& gen, std::size_t n, std::size_t classes, std::size_t dim) {
  LabeledBatch batch;
  batch.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) batch.features.push_back(gen.normal());
    batch.labels.push_back(gen.below(classes));
  }
  return batch;
}

// Loss recomputed from scratch: no shared code with the library.
inline double reference_loss(const LinearClassifier& c, const LabeledBatch& batch) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<double> z(c.classes());
    for (std::size_t k = 0; k < c.classes(); ++k) {
      z[k] = c.bias()[k];
      for (std::size_t d = 0; d < c.dim(); ++d) z[k] += c.weights()[k * c.dim() + d] * batch.features[i * c.dim() + d];
    }
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    total += m + std::log(s) - z[batch.labels[i]];
  }
  double norm = 0.0;
  for (double w : c.weights()) norm += w * w;
  return total / static_cast<double>(batch.size()) + 0.5 * c.l2() * norm;
}

}  // namespace weakspot::testing
