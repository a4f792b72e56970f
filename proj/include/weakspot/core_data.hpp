#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace weakspot {

using Json = nlohmann::json;

/// Row-major matrix of 32-bit embeddings. The constructor checks shape only;
/// finiteness is enforced where data crosses a boundary (load, save, bind).
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim = 1);
  EmbeddingStore(std::size_t dim, std::vector<float> values);

  std::size_t count() const noexcept { return values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t i) const;
  std::span<const float> values() const noexcept { return values_; }

  void append(std::span<const float> row);

  // Index of the first non-finite value, if any.
  std::optional<std::size_t> find_non_finite() const;

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  std::size_t dim_;
  std::vector<float> values_;
};

enum class Split { train, test, procured };
enum class Provenance { original, web, txt2img, synthetic };
enum class Environment { indoor, outdoor, unknown };

std::string_view to_string(Split split);
std::string_view to_string(Provenance provenance);
std::string_view to_string(Environment environment);
Split parse_split(std::string_view text);
Provenance parse_provenance(std::string_view text);
Environment parse_environment(std::string_view text);

struct Scene {
  Environment environment = Environment::unknown;
  std::optional<std::string> venue;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct DetectedObject {
  std::string label;
  double relevance = 0.0;

  friend bool operator==(const DetectedObject&, const DetectedObject&) = default;
};

struct Record {
  std::string id;
  Split split = Split::train;
  std::string true_class;
  std::map<std::string, std::string> attributes;
  std::optional<std::string> caption;
  std::optional<Scene> scene;
  std::optional<std::vector<DetectedObject>> objects;
  Provenance provenance = Provenance::original;

  friend bool operator==(const Record&, const Record&) = default;
};

Json to_json(const Record& record);
Record record_from_json(const Json& j);

class ClassVocabulary {
 public:
  ClassVocabulary() = default;
  explicit ClassVocabulary(std::vector<std::string> labels);

  // Returns the position of `label`, appending it when new.
  std::size_t add(const std::string& label);

  bool contains(std::string_view label) const;
  std::size_t index_of(std::string_view label) const;
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }

  friend bool operator==(const ClassVocabulary& a, const ClassVocabulary& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Embeddings bound to their per-record metadata. Only `bind` and `merge`
/// construct one, so a bundle always satisfies its invariants.
class DatasetBundle {
 public:
  const EmbeddingStore& store() const noexcept { return store_; }
  const std::vector<Record>& records() const noexcept { return records_; }
  const ClassVocabulary& vocabulary() const noexcept { return vocabulary_; }

  std::size_t count() const noexcept { return records_.size(); }
  std::size_t dim() const noexcept { return store_.dim(); }
  std::span<const float> vector(std::size_t i) const { return store_.row(i); }
  std::optional<std::size_t> find(std::string_view id) const;

  // Subset in original order; vocabulary is kept as-is.
  DatasetBundle select(const std::function<bool(const Record&)>& keep) const;

 private:
  friend DatasetBundle bind_records(EmbeddingStore, std::vector<Record>, const ClassVocabulary&);

  EmbeddingStore store_;
  std::vector<Record> records_;
  ClassVocabulary vocabulary_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// WSEM binary format.
std::string encode_embedding_store(const EmbeddingStore& store);
EmbeddingStore decode_embedding_store(std::string_view bytes);
EmbeddingStore load_embedding_store(const std::filesystem::path& path);
void save_embedding_store(const EmbeddingStore& store, const std::filesystem::path& path);

// JSONL manifest, one record per line.
std::vector<Record> load_manifest(const std::filesystem::path& path);
void save_manifest(std::span<const Record> records, const std::filesystem::path& path);
std::string encode_manifest(std::span<const Record> records);

/// Validates and binds. The vocabulary starts from `seed` (if any) and is
/// extended with new true_class labels in first-appearance order.
DatasetBundle bind_records(EmbeddingStore store, std::vector<Record> records,
                   const ClassVocabulary& seed = {});

DatasetBundle load_bundle(const std::filesystem::path& store_path,
                          const std::filesystem::path& manifest_path);

/// Records of `base` followed by those of `added`.
DatasetBundle merge(const DatasetBundle& base, const DatasetBundle& added);

/// 100 * added / base.
double augmentation_fraction(std::size_t added_count, std::size_t base_count);

}  // namespace weakspot
