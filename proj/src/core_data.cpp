#include "weakspot/core_data.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "weakspot/error.hpp"
#include "weakspot/io.hpp"

namespace weakspot {

namespace {

constexpr char kMagic[4] = {'W', 'S', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 16;

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    return it->get<T>();
  }
  return std::nullopt;
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
  }
}

EmbeddingStore::EmbeddingStore(std::size_t dim, std::vector<float> values)
    : EmbeddingStore(dim) {
  if (values.size() % dim != 0) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(values.size()) + " values do not fill rows of dim " +
                    std::to_string(dim));
  }
  values_ = std::move(values);
}

std::span<const float> EmbeddingStore::row(std::size_t i) const {
  if (i >= count()) {
    throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(i) + " out of range");
  }
  return std::span<const float>(values_).subspan(i * dim_, dim_);
}

void EmbeddingStore::append(std::span<const float> row) {
  if (row.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "row of dim " + std::to_string(row.size()) +
                                            " appended to store of dim " + std::to_string(dim_));
  }
  values_.insert(values_.end(), row.begin(), row.end());
}

std::optional<std::size_t> EmbeddingStore::find_non_finite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) return i;
  }
  return std::nullopt;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::procured: return "procured";
  }
  return "train";
}

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::original: return "original";
    case Provenance::web: return "web";
    case Provenance::txt2img: return "txt2img";
    case Provenance::synthetic: return "synthetic";
  }
  return "original";
}

std::string_view to_string(Environment environment) {
  switch (environment) {
    case Environment::indoor: return "indoor";
    case Environment::outdoor: return "outdoor";
    case Environment::unknown: return "unknown";
  }
  return "unknown";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  if (text == "procured") return Split::procured;
  throw Error(ErrorCode::ParseError, "unknown split '" + std::string(text) + "'");
}

Provenance parse_provenance(std::string_view text) {
  if (text == "original") return Provenance::original;
  if (text == "web") return Provenance::web;
  if (text == "txt2img") return Provenance::txt2img;
  if (text == "synthetic") return Provenance::synthetic;
  throw Error(ErrorCode::ParseError, "unknown provenance '" + std::string(text) + "'");
}

Environment parse_environment(std::string_view text) {
  if (text == "indoor") return Environment::indoor;
  if (text == "outdoor") return Environment::outdoor;
  if (text == "unknown") return Environment::unknown;
  throw Error(ErrorCode::ParseError, "unknown environment '" + std::string(text) + "'");
}

Json to_json(const Record& record) {
  Json j;
  j["id"] = record.id;
  j["split"] = to_string(record.split);
  j["true_class"] = record.true_class;
  j["attributes"] = record.attributes;
  j["caption"] = record.caption ? Json(*record.caption) : Json(nullptr);
  if (record.scene) {
    j["scene"] = {{"environment", to_string(record.scene->environment)},
                  {"venue", record.scene->venue ? Json(*record.scene->venue) : Json(nullptr)}};
  } else {
    j["scene"] = nullptr;
  }
  if (record.objects) {
    Json objects = Json::array();
    for (const auto& object : *record.objects) {
      objects.push_back({{"label", object.label}, {"relevance", object.relevance}});
    }
    j["objects"] = std::move(objects);
  } else {
    j["objects"] = nullptr;
  }
  j["provenance"] = to_string(record.provenance);
  return j;
}

Record record_from_json(const Json& j) {
  try {
    Record record;
    record.id = j.at("id").get<std::string>();
    record.split = parse_split(j.at("split").get<std::string>());
    record.true_class = j.at("true_class").get<std::string>();
    if (auto attrs = optional_field<std::map<std::string, std::string>>(j, "attributes")) {
      record.attributes = std::move(*attrs);
    }
    record.caption = optional_field<std::string>(j, "caption");
    if (auto it = j.find("scene"); it != j.end() && !it->is_null()) {
      Scene scene;
      if (auto env = optional_field<std::string>(*it, "environment")) {
        scene.environment = parse_environment(*env);
      }
      scene.venue = optional_field<std::string>(*it, "venue");
      record.scene = std::move(scene);
    }
    if (auto it = j.find("objects"); it != j.end() && !it->is_null()) {
      std::vector<DetectedObject> objects;
      for (const auto& o : *it) {
        objects.push_back({o.at("label").get<std::string>(), o.at("relevance").get<double>()});
      }
      record.objects = std::move(objects);
    }
    if (auto prov = optional_field<std::string>(j, "provenance")) {
      record.provenance = parse_provenance(*prov);
    }
    return record;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("record: ") + e.what());
  }
}

ClassVocabulary::ClassVocabulary(std::vector<std::string> labels) {
  for (auto& label : labels) {
    if (contains(label)) {
      throw Error(ErrorCode::DuplicateLabel, "label '" + label + "' repeated");
    }
    add(label);
  }
}

std::size_t ClassVocabulary::add(const std::string& label) {
  if (auto it = index_.find(label); it != index_.end()) return it->second;
  index_.emplace(label, labels_.size());
  labels_.push_back(label);
  return labels_.size() - 1;
}

bool ClassVocabulary::contains(std::string_view label) const {
  return index_.contains(std::string(label));
}

std::size_t ClassVocabulary::index_of(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) {
    throw Error(ErrorCode::UnknownClass, "class '" + std::string(label) + "' not in vocabulary");
  }
  return it->second;
}

std::optional<std::size_t> DatasetBundle::find(std::string_view id) const {
  if (auto it = by_id_.find(std::string(id)); it != by_id_.end()) return it->second;
  return std::nullopt;
}

DatasetBundle DatasetBundle::select(const std::function<bool(const Record&)>& keep) const {
  EmbeddingStore store(dim());
  std::vector<Record> records;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (keep(records_[i])) {
      store.append(store_.row(i));
      records.push_back(records_[i]);
    }
  }
  return bind_records(std::move(store), std::move(records), vocabulary_);
}

std::string encode_embedding_store(const EmbeddingStore& store) {
  if (auto bad = store.find_non_finite()) {
    throw Error(ErrorCode::NonFiniteValue,
                "value " + std::to_string(*bad) + " is not finite");
  }
  std::string out(kMagic, sizeof(kMagic));
  out.reserve(kHeaderSize + store.values().size() * 4);
  io::put_u32(out, kVersion);
  io::put_u32(out, static_cast<std::uint32_t>(store.count()));
  io::put_u32(out, static_cast<std::uint32_t>(store.dim()));
  for (float v : store.values()) io::put_f32(out, v);
  return out;
}

EmbeddingStore decode_embedding_store(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw Error(ErrorCode::BadMagic, "missing WSEM magic");
  }
  if (bytes.size() < kHeaderSize) {
    throw Error(ErrorCode::TruncatedPayload, "header shorter than 16 bytes");
  }
  if (const auto version = io::get_u32(bytes, 4); version != kVersion) {
    throw Error(ErrorCode::BadVersion, "version " + std::to_string(version));
  }
  const std::size_t count = io::get_u32(bytes, 8);
  const std::size_t dim = io::get_u32(bytes, 12);
  if (dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "dim must be positive");
  }
  const std::size_t n = count * dim;
  if (bytes.size() - kHeaderSize < n * 4) {
    throw Error(ErrorCode::TruncatedPayload, "expected " + std::to_string(n * 4) +
                                                 " payload bytes, found " +
                                                 std::to_string(bytes.size() - kHeaderSize));
  }
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = io::get_f32(bytes, kHeaderSize + 4 * i);
  }
  EmbeddingStore store(dim, std::move(values));
  if (auto bad = store.find_non_finite()) {
    throw Error(ErrorCode::NonFiniteValue, "value " + std::to_string(*bad) + " is not finite");
  }
  return store;
}

EmbeddingStore load_embedding_store(const std::filesystem::path& path) {
  return decode_embedding_store(io::read_file(path));
}

void save_embedding_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_embedding_store(store));
}

std::vector<Record> load_manifest(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(record_from_json(j));
  }
  return records;
}

std::string encode_manifest(std::span<const Record> records) {
  std::string out;
  for (const auto& record : records) {
    out += to_json(record).dump();
    out += '\n';
  }
  return out;
}

void save_manifest(std::span<const Record> records, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_manifest(records));
}

DatasetBundle bind_records(EmbeddingStore store, std::vector<Record> records, const ClassVocabulary& seed) {
  if (records.size() != store.count()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(store.count()) + " rows but " +
                                               std::to_string(records.size()) + " records");
  }
  if (auto bad = store.find_non_finite()) {
    throw Error(ErrorCode::NonFiniteValue, "value " + std::to_string(*bad) + " is not finite");
  }
  DatasetBundle bundle;
  bundle.vocabulary_ = seed;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    if (record.id.empty()) {
      throw Error(ErrorCode::InvalidArgument, "record " + std::to_string(i) + " has empty id");
    }
    if (!bundle.by_id_.emplace(record.id, i).second) {
      throw Error(ErrorCode::DuplicateId, "id '" + record.id + "' appears twice");
    }
    if (record.objects) {
      for (const auto& object : *record.objects) {
        if (!(object.relevance >= 0.0 && object.relevance <= 1.0)) {
          throw Error(ErrorCode::InvalidArgument,
                      "record '" + record.id + "' object relevance outside [0,1]");
        }
      }
    }
    bundle.vocabulary_.add(record.true_class);
  }
  bundle.store_ = std::move(store);
  bundle.records_ = std::move(records);
  return bundle;
}

DatasetBundle load_bundle(const std::filesystem::path& store_path,
                          const std::filesystem::path& manifest_path) {
  return bind_records(load_embedding_store(store_path), load_manifest(manifest_path));
}

DatasetBundle merge(const DatasetBundle& base, const DatasetBundle& added) {
  if (added.count() == 0) return base;
  if (base.count() == 0 && base.dim() != added.dim()) {
    return bind_records(added.store(), added.records(), base.vocabulary());
  }
  if (base.dim() != added.dim()) {
    throw Error(ErrorCode::DimMismatch, "dim " + std::to_string(base.dim()) + " merged with dim " +
                                            std::to_string(added.dim()));
  }
  std::vector<float> values(base.store().values().begin(), base.store().values().end());
  values.insert(values.end(), added.store().values().begin(), added.store().values().end());
  std::vector<Record> records = base.records();
  records.insert(records.end(), added.records().begin(), added.records().end());
  ClassVocabulary vocabulary = base.vocabulary();
  for (const auto& label : added.vocabulary().labels()) vocabulary.add(label);
  return bind_records(EmbeddingStore(base.dim(), std::move(values)), std::move(records), vocabulary);
}

double augmentation_fraction(std::size_t added_count, std::size_t base_count) {
  if (base_count == 0) {
    throw Error(ErrorCode::ZeroBase, "base count is zero");
  }
  return 100.0 * static_cast<double>(added_count) / static_cast<double>(base_count);
}

}  // namespace weakspot
