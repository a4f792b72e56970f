#include "weakspot/benchmark.hpp"

#include <cmath>
#include <cstdio>

#include "weakspot/error.hpp"
#include "weakspot/random.hpp"

namespace weakspot {

namespace {

struct ClassFlavor {
  const char* label;
  const char* object;
  Environment environment;
  const char* venue;
};

constexpr ClassFlavor kFlavors[] = {
    {"doctor", "stethoscope", Environment::indoor, "hospital_room"},
    {"nurse", "clipboard", Environment::indoor, "clinic"},
    {"gardener", "shovel", Environment::outdoor, "vegetable_garden"},
    {"lifeguard", "buoy", Environment::outdoor, "beach"},
    {"carpenter", "hammer", Environment::indoor, "workshop"},
    {"musician", "guitar", Environment::indoor, "music_studio"},
    {"traffic_cop", "car", Environment::outdoor, "street"},
    {"flight_attendant", "trolley", Environment::indoor, "airplane_cabin"},
};
constexpr std::size_t kFlavorCount = sizeof(kFlavors) / sizeof(kFlavors[0]);

constexpr const char* kSubjects[] = {"a person", "she", "he", "someone", "a woman", "a man"};
constexpr const char* kActivities[] = {"working", "standing", "talking", "waiting", "resting"};

// Counter slots past the embedding coordinates, used for metadata jitter.
constexpr std::uint64_t kJitterSlot = 1u << 20;

const ClassFlavor& flavor(std::size_t cls) { return kFlavors[cls % kFlavorCount]; }

void generate_split(const BenchmarkSpec& spec, Split split, std::size_t per_class,
                    EmbeddingStore& store, std::vector<Record>& records) {
  const auto labels = spec.class_labels();
  const std::uint64_t split_key =
      random::combine(spec.seed, random::hash_text(std::string(to_string(split))));
  const std::size_t subgroup = spec.subgroup_size(per_class);
  std::size_t frame = 0;

  for (std::size_t cls = 0; cls < spec.class_count; ++cls) {
    const auto centre = spec.centroid(cls);
    const auto displaced = spec.subgroup_center();
    for (std::size_t i = 0; i < per_class; ++i) {
      const bool planted = cls == spec.subgroup.source_class && i < subgroup;
      const auto& mean = planted ? displaced : centre;
      const random::CounterStream stream(random::combine(random::combine(split_key, cls), i));

      std::vector<float> row(spec.dim);
      for (std::size_t d = 0; d < spec.dim; ++d) {
        row[d] = static_cast<float>(mean[d] + spec.noise * stream.normal(d));
      }
      store.append(row);

      const auto& f = flavor(cls);
      char id[96];
      std::snprintf(id, sizeof(id), "%s-%s-%04zu", std::string(to_string(split)).c_str(),
                    labels[cls].c_str(), i);
      Record record;
      record.id = id;
      record.split = split;
      record.true_class = labels[cls];
      record.attributes[spec.subgroup.attribute] =
          planted ? spec.subgroup.minority_value : spec.subgroup.majority_value;
      const char* subject = kSubjects[(i + cls) % std::size(kSubjects)];
      const char* activity = kActivities[(i / std::size(kSubjects)) % std::size(kActivities)];
      std::string object_phrase = f.object;
      if (planted) object_phrase = spec.subgroup.object_label;
      for (auto& c : object_phrase) c = c == '_' ? ' ' : c;
      record.caption = std::string(subject) + " " + activity + " next to a " + object_phrase +
                       ", frame " + std::to_string(++frame);
      record.scene = Scene{f.environment, std::string(f.venue)};

      const double jitter = 0.1 * stream.uniform(kJitterSlot);
      std::vector<DetectedObject> objects = {{"person", 0.55 + jitter},
                                             {f.object, 0.7 + jitter}};
      if (planted) objects.push_back({spec.subgroup.object_label, 0.85 + jitter});
      record.objects = std::move(objects);
      records.push_back(std::move(record));
    }
  }
}

}  // namespace

void BenchmarkSpec::validate() const {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
  if (class_count < 2) fail("need at least two classes");
  if (dim < class_count) fail("dim must be at least class_count for equidistant centroids");
  if (train_per_class == 0 || test_per_class == 0) fail("per-class counts must be positive");
  if (!(spacing > 0.0)) fail("spacing must be positive");
  if (!(noise >= 0.0)) fail("noise must be non-negative");
  if (subgroup.source_class >= class_count || subgroup.target_class >= class_count ||
      subgroup.source_class == subgroup.target_class) {
    fail("subgroup source/target must be distinct valid classes");
  }
  if (!(subgroup.fraction > 0.0 && subgroup.fraction < 1.0)) fail("fraction must be in (0,1)");
  if (!(subgroup.beta >= 0.0 && subgroup.beta <= 1.0)) fail("beta must be in [0,1]");
  if (subgroup.minority_value == subgroup.majority_value) {
    fail("minority and majority attribute values must differ");
  }
  if (!labels.empty() && labels.size() != class_count) fail("labels must match class_count");
}

std::vector<std::string> BenchmarkSpec::class_labels() const {
  if (!labels.empty()) return labels;
  std::vector<std::string> out;
  for (std::size_t c = 0; c < class_count; ++c) {
    out.push_back(c < kFlavorCount ? kFlavors[c].label
                                   : std::string(kFlavors[c % kFlavorCount].label) + "_" +
                                         std::to_string(c / kFlavorCount));
  }
  return out;
}

std::vector<float> BenchmarkSpec::centroid(std::size_t cls) const {
  // Scaled basis vectors: every pair sits exactly `spacing` apart.
  std::vector<float> c(dim, 0.0f);
  c[cls] = static_cast<float>(spacing / std::sqrt(2.0));
  return c;
}

std::vector<float> BenchmarkSpec::subgroup_center() const {
  const auto src = centroid(subgroup.source_class);
  const auto tgt = centroid(subgroup.target_class);
  std::vector<float> c(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    c[d] = static_cast<float>(src[d] + subgroup.beta * (static_cast<double>(tgt[d]) - src[d]));
  }
  return c;
}

std::size_t BenchmarkSpec::subgroup_size(std::size_t per_class) const {
  return static_cast<std::size_t>(std::llround(subgroup.fraction * static_cast<double>(per_class)));
}

double BenchmarkSpec::planted_radius() const {
  return 1.3 * noise * std::sqrt(2.0 * static_cast<double>(dim));
}

Json to_json(const BenchmarkSpec& spec) {
  return {{"class_count", spec.class_count},
          {"dim", spec.dim},
          {"train_per_class", spec.train_per_class},
          {"test_per_class", spec.test_per_class},
          {"spacing", spec.spacing},
          {"noise", spec.noise},
          {"seed", spec.seed},
          {"labels", spec.class_labels()},
          {"subgroup",
           {{"source_class", spec.subgroup.source_class},
            {"target_class", spec.subgroup.target_class},
            {"attribute", spec.subgroup.attribute},
            {"minority_value", spec.subgroup.minority_value},
            {"majority_value", spec.subgroup.majority_value},
            {"fraction", spec.subgroup.fraction},
            {"beta", spec.subgroup.beta},
            {"object_label", spec.subgroup.object_label}}}};
}

BenchmarkSpec benchmark_spec_from_json(const Json& j) {
  BenchmarkSpec spec;
  try {
    spec.class_count = j.value("class_count", spec.class_count);
    spec.dim = j.value("dim", spec.dim);
    spec.train_per_class = j.value("train_per_class", spec.train_per_class);
    spec.test_per_class = j.value("test_per_class", spec.test_per_class);
    spec.spacing = j.value("spacing", spec.spacing);
    spec.noise = j.value("noise", spec.noise);
    spec.seed = j.value("seed", spec.seed);
    spec.labels = j.value("labels", spec.labels);
    if (auto it = j.find("subgroup"); it != j.end()) {
      auto& s = spec.subgroup;
      s.source_class = it->value("source_class", s.source_class);
      s.target_class = it->value("target_class", s.target_class);
      s.attribute = it->value("attribute", s.attribute);
      s.minority_value = it->value("minority_value", s.minority_value);
      s.majority_value = it->value("majority_value", s.majority_value);
      s.fraction = it->value("fraction", s.fraction);
      s.beta = it->value("beta", s.beta);
      s.object_label = it->value("object_label", s.object_label);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  spec.validate();
  return spec;
}

Benchmark make_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  EmbeddingStore train_store(spec.dim);
  std::vector<Record> train_records;
  generate_split(spec, Split::train, spec.train_per_class, train_store, train_records);
  EmbeddingStore test_store(spec.dim);
  std::vector<Record> test_records;
  generate_split(spec, Split::test, spec.test_per_class, test_store, test_records);

  auto train = bind_records(std::move(train_store), std::move(train_records));
  auto test = bind_records(std::move(test_store), std::move(test_records), train.vocabulary());
  return {std::move(train), std::move(test)};
}

bool in_planted_subgroup(const Record& record, const BenchmarkSpec& spec) {
  auto it = record.attributes.find(spec.subgroup.attribute);
  return it != record.attributes.end() && it->second == spec.subgroup.minority_value;
}

}  // namespace weakspot
