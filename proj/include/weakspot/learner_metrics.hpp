#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "weakspot/core_data.hpp"
#include "weakspot/weakspot_audit.hpp"

namespace weakspot {

/// Softmax head over fixed embeddings: logits = W x + b.
class LinearClassifier {
 public:
  LinearClassifier() = default;
  LinearClassifier(ClassVocabulary vocabulary, std::size_t dim, double l2 = 0.0);
  LinearClassifier(ClassVocabulary vocabulary, std::size_t dim, double l2,
                   std::vector<double> weights, std::vector<double> bias);

  const ClassVocabulary& vocabulary() const noexcept { return vocabulary_; }
  std::size_t classes() const noexcept { return vocabulary_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  double l2() const noexcept { return l2_; }

  // Row-major classes() x dim().
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::vector<double>& weights() noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  std::vector<double>& bias() noexcept { return bias_; }

  /// Softmax probabilities for one row.
  std::vector<double> probabilities(std::span<const float> x) const;

  /// Same vocabulary prefix, new classes appended with zero parameters.
  LinearClassifier extended(const ClassVocabulary& vocabulary) const;

  friend bool operator==(const LinearClassifier&, const LinearClassifier&) = default;

 private:
  ClassVocabulary vocabulary_;
  std::size_t dim_ = 0;
  double l2_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  bool warm_start = false;

  void validate() const;
};

Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& j);

/// Dense (vector, class index) samples in 64-bit.
struct LabeledBatch {
  std::size_t dim = 0;
  std::vector<double> features;  // row-major
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

LabeledBatch make_batch(const DatasetBundle& bundle, const ClassVocabulary& vocabulary);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> weights;  // same shape as the classifier's weights
  std::vector<double> bias;
};

/// Mean softmax cross-entropy plus (l2/2)||W||^2 and its analytic gradient.
LossGradient loss_and_gradient(const LinearClassifier& classifier, const LabeledBatch& batch);

/// Optional per-epoch observer: the loss evaluated before each update.
struct TrainTrace {
  std::vector<double> losses;
};

/// Full-batch gradient descent over every record of `bundle`, zero-initialised.
LinearClassifier train(const DatasetBundle& bundle, const TrainConfig& config,
                       TrainTrace* trace = nullptr);

/// Continues from `classifier` on `merged` (warm start) or retrains from zero
/// when config.warm_start is false. The vocabulary is extended with classes
/// new to `merged`.
LinearClassifier finetune(const LinearClassifier& classifier, const DatasetBundle& merged,
                          const TrainConfig& config, TrainTrace* trace = nullptr);

/// Argmax per row, ties to the lowest vocabulary index.
std::vector<Prediction> predict(const LinearClassifier& classifier, const DatasetBundle& bundle);
std::vector<std::vector<double>> predict_scores(const LinearClassifier& classifier,
                                                const EmbeddingStore& store);

using GroupKey = std::pair<std::string, std::string>;  // (attribute, value)

struct MetricsReport {
  std::size_t total = 0;
  double overall_accuracy = 0.0;  // percent
  std::map<std::string, double> per_class_accuracy;
  std::map<std::string, std::size_t> per_class_support;
  std::map<GroupKey, double> per_group_accuracy;
  std::map<GroupKey, std::size_t> per_group_support;
  std::vector<std::string> labels;                  // confusion axes
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

MetricsReport evaluate(std::span<const Prediction> predictions, std::span<const Record> records,
                       const ClassVocabulary& vocabulary);

struct DisparityReport {
  std::string attribute;
  std::string group_a;
  std::string group_b;
  double accuracy_a = 0.0;
  double accuracy_b = 0.0;
  double disparity = 0.0;  // percentage points
};

/// |accuracy_a - accuracy_b| in percentage points.
double disparity_points(double accuracy_a, double accuracy_b);

DisparityReport disparity(const MetricsReport& report, const std::string& attribute,
                          const std::string& group_a, const std::string& group_b);

/// 100 (before - after) / before.
double disparity_reduction(double before, double after);

Json to_json(const MetricsReport& report);
Json to_json(const DisparityReport& report);

// Checkpoint: one JSON header line {vocabulary, dim, l2}, then a binary block
// "WSCK", version, classes, dim, classes*dim weights and classes biases as
// little-endian IEEE-754 doubles.
std::string encode_checkpoint(const LinearClassifier& classifier);
LinearClassifier decode_checkpoint(std::string_view bytes);
void save_checkpoint(const LinearClassifier& classifier, const std::filesystem::path& path);
LinearClassifier load_checkpoint(const std::filesystem::path& path);

}  // namespace weakspot
