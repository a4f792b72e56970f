#include "weakspot/learner_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "weakspot/error.hpp"
#include "weakspot/io.hpp"

namespace weakspot {

namespace {

constexpr char kCheckpointMagic[4] = {'W', 'S', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Numerically stable softmax of `logits` in place; returns log-sum-exp.
double softmax_in_place(std::vector<double>& logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - max);
    sum += z;
  }
  for (double& z : logits) z /= sum;
  return max + std::log(sum);
}

void require_populated_classes(const LabeledBatch& batch, const ClassVocabulary& vocabulary) {
  std::vector<std::size_t> counts(vocabulary.size(), 0);
  for (auto label : batch.labels) ++counts[label];
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw Error(ErrorCode::EmptyClass, "class '" + vocabulary.label(c) + "' has no samples");
    }
  }
}

LinearClassifier descend(LinearClassifier classifier, const LabeledBatch& batch,
                         const TrainConfig& config, TrainTrace* trace) {
  if (trace) trace->losses.clear();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto step = loss_and_gradient(classifier, batch);
    if (!std::isfinite(step.loss)) {
      throw Error(ErrorCode::DivergedLoss, "non-finite loss at epoch " + std::to_string(epoch));
    }
    if (trace) trace->losses.push_back(step.loss);
    auto& w = classifier.weights();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * step.weights[i];
    auto& b = classifier.bias();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= config.learning_rate * step.bias[i];
  }
  return classifier;
}

}  // namespace

LinearClassifier::LinearClassifier(ClassVocabulary vocabulary, std::size_t dim, double l2)
    : vocabulary_(std::move(vocabulary)),
      dim_(dim),
      l2_(l2),
      weights_(vocabulary_.size() * dim, 0.0),
      bias_(vocabulary_.size(), 0.0) {}

LinearClassifier::LinearClassifier(ClassVocabulary vocabulary, std::size_t dim, double l2,
                                   std::vector<double> weights, std::vector<double> bias)
    : vocabulary_(std::move(vocabulary)),
      dim_(dim),
      l2_(l2),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (weights_.size() != vocabulary_.size() * dim_ || bias_.size() != vocabulary_.size()) {
    throw Error(ErrorCode::LengthMismatch, "classifier parameters do not match shape " +
                                               std::to_string(vocabulary_.size()) + "x" +
                                               std::to_string(dim_));
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(weights_.begin(), weights_.end(), finite) ||
      !std::all_of(bias_.begin(), bias_.end(), finite) || !std::isfinite(l2_)) {
    throw Error(ErrorCode::NonFiniteValue, "classifier parameters must be finite");
  }
}

std::vector<double> LinearClassifier::probabilities(std::span<const float> x) const {
  if (x.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "input dim " + std::to_string(x.size()) +
                                            " against classifier dim " + std::to_string(dim_));
  }
  std::vector<double> logits(classes());
  for (std::size_t c = 0; c < classes(); ++c) {
    const double* row = weights_.data() + c * dim_;
    double z = bias_[c];
    for (std::size_t d = 0; d < dim_; ++d) z += row[d] * static_cast<double>(x[d]);
    logits[c] = z;
  }
  softmax_in_place(logits);
  return logits;
}

LinearClassifier LinearClassifier::extended(const ClassVocabulary& vocabulary) const {
  ClassVocabulary merged = vocabulary_;
  for (const auto& label : vocabulary.labels()) merged.add(label);
  std::vector<double> weights = weights_;
  std::vector<double> bias = bias_;
  weights.resize(merged.size() * dim_, 0.0);
  bias.resize(merged.size(), 0.0);
  return LinearClassifier(std::move(merged), dim_, l2_, std::move(weights), std::move(bias));
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (!(l2 >= 0.0)) throw Error(ErrorCode::InvalidConfig, "l2 must be >= 0");
}

Json to_json(const TrainConfig& config) {
  return {{"learning_rate", config.learning_rate},
          {"epochs", config.epochs},
          {"l2", config.l2},
          {"seed", config.seed},
          {"warm_start", config.warm_start}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig config;
  try {
    config.learning_rate = j.value("learning_rate", config.learning_rate);
    config.epochs = j.value("epochs", config.epochs);
    config.l2 = j.value("l2", config.l2);
    config.seed = j.value("seed", config.seed);
    config.warm_start = j.value("warm_start", config.warm_start);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("train: ") + e.what());
  }
  config.validate();
  return config;
}

LabeledBatch make_batch(const DatasetBundle& bundle, const ClassVocabulary& vocabulary) {
  LabeledBatch batch;
  batch.dim = bundle.dim();
  batch.features.reserve(bundle.count() * bundle.dim());
  batch.labels.reserve(bundle.count());
  for (std::size_t i = 0; i < bundle.count(); ++i) {
    const auto row = bundle.vector(i);
    batch.features.insert(batch.features.end(), row.begin(), row.end());
    batch.labels.push_back(vocabulary.index_of(bundle.records()[i].true_class));
  }
  return batch;
}

LossGradient loss_and_gradient(const LinearClassifier& classifier, const LabeledBatch& batch) {
  if (batch.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty batch");
  if (batch.dim != classifier.dim() || batch.features.size() != batch.size() * batch.dim) {
    throw Error(ErrorCode::DimMismatch, "batch dim " + std::to_string(batch.dim) +
                                            " against classifier dim " +
                                            std::to_string(classifier.dim()));
  }
  const std::size_t classes = classifier.classes();
  const std::size_t dim = classifier.dim();
  const auto& w = classifier.weights();
  const auto& b = classifier.bias();

  LossGradient out;
  out.weights.assign(w.size(), 0.0);
  out.bias.assign(classes, 0.0);
  std::vector<double> logits(classes);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double* x = batch.features.data() + i * dim;
    const std::size_t y = batch.labels[i];
    if (y >= classes) throw Error(ErrorCode::UnknownClass, "label index out of range");
    for (std::size_t c = 0; c < classes; ++c) {
      double z = b[c];
      const double* row = w.data() + c * dim;
      for (std::size_t d = 0; d < dim; ++d) z += row[d] * x[d];
      logits[c] = z;
    }
    const double true_logit = logits[y];
    const double lse = softmax_in_place(logits);
    out.loss += lse - true_logit;
    logits[y] -= 1.0;  // now dL/dz
    for (std::size_t c = 0; c < classes; ++c) {
      out.bias[c] += logits[c];
      double* grow = out.weights.data() + c * dim;
      for (std::size_t d = 0; d < dim; ++d) grow[d] += logits[c] * x[d];
    }
  }

  const double n = static_cast<double>(batch.size());
  const double l2 = classifier.l2();
  out.loss /= n;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.weights[i] = out.weights[i] / n + l2 * w[i];
    norm2 += w[i] * w[i];
  }
  for (auto& g : out.bias) g /= n;
  out.loss += 0.5 * l2 * norm2;
  return out;
}

LinearClassifier train(const DatasetBundle& bundle, const TrainConfig& config, TrainTrace* trace) {
  config.validate();
  const auto batch = make_batch(bundle, bundle.vocabulary());
  require_populated_classes(batch, bundle.vocabulary());
  LinearClassifier initial(bundle.vocabulary(), bundle.dim(), config.l2);
  return descend(std::move(initial), batch, config, trace);
}

LinearClassifier finetune(const LinearClassifier& classifier, const DatasetBundle& merged,
                          const TrainConfig& config, TrainTrace* trace) {
  config.validate();
  if (merged.dim() != classifier.dim()) {
    throw Error(ErrorCode::DimMismatch, "bundle dim " + std::to_string(merged.dim()) +
                                            " against classifier dim " +
                                            std::to_string(classifier.dim()));
  }
  const auto grown = classifier.extended(merged.vocabulary());
  LinearClassifier start = config.warm_start
                               ? LinearClassifier(grown.vocabulary(), grown.dim(), config.l2,
                                                  grown.weights(), grown.bias())
                               : LinearClassifier(grown.vocabulary(), grown.dim(), config.l2);
  const auto batch = make_batch(merged, start.vocabulary());
  require_populated_classes(batch, start.vocabulary());
  return descend(std::move(start), batch, config, trace);
}

std::vector<std::vector<double>> predict_scores(const LinearClassifier& classifier,
                                                const EmbeddingStore& store) {
  if (store.dim() != classifier.dim()) {
    throw Error(ErrorCode::DimMismatch, "store dim " + std::to_string(store.dim()) +
                                            " against classifier dim " +
                                            std::to_string(classifier.dim()));
  }
  std::vector<std::vector<double>> scores;
  scores.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    scores.push_back(classifier.probabilities(store.row(i)));
  }
  return scores;
}

std::vector<Prediction> predict(const LinearClassifier& classifier, const DatasetBundle& bundle) {
  auto scores = predict_scores(classifier, bundle.store());
  std::vector<Prediction> predictions;
  predictions.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores[i].size(); ++c) {
      if (scores[i][c] > scores[i][best]) best = c;
    }
    predictions.push_back(
        {bundle.records()[i].id, classifier.vocabulary().label(best), std::move(scores[i])});
  }
  return predictions;
}

MetricsReport evaluate(std::span<const Prediction> predictions, std::span<const Record> records,
                       const ClassVocabulary& vocabulary) {
  const auto predicted = prediction_map(predictions);
  MetricsReport report;
  report.labels = vocabulary.labels();
  report.confusion.assign(vocabulary.size(), std::vector<std::size_t>(vocabulary.size(), 0));

  std::map<std::string, std::size_t> class_correct;
  std::map<GroupKey, std::size_t> group_correct;
  std::size_t correct = 0;
  for (const auto& record : records) {
    auto it = predicted.find(record.id);
    if (it == predicted.end()) {
      throw Error(ErrorCode::MissingPrediction, "no prediction for '" + record.id + "'");
    }
    const bool hit = it->second == record.true_class;
    ++report.confusion[vocabulary.index_of(record.true_class)][vocabulary.index_of(it->second)];
    ++report.per_class_support[record.true_class];
    class_correct[record.true_class] += hit ? 1 : 0;
    for (const auto& [attribute, value] : record.attributes) {
      ++report.per_group_support[{attribute, value}];
      group_correct[{attribute, value}] += hit ? 1 : 0;
    }
    correct += hit ? 1 : 0;
  }

  report.total = records.size();
  report.overall_accuracy =
      report.total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(report.total);
  for (const auto& [label, support] : report.per_class_support) {
    report.per_class_accuracy[label] =
        100.0 * static_cast<double>(class_correct[label]) / static_cast<double>(support);
  }
  for (const auto& [group, support] : report.per_group_support) {
    report.per_group_accuracy[group] =
        100.0 * static_cast<double>(group_correct[group]) / static_cast<double>(support);
  }
  return report;
}

double disparity_points(double accuracy_a, double accuracy_b) {
  return std::abs(accuracy_a - accuracy_b);
}

DisparityReport disparity(const MetricsReport& report, const std::string& attribute,
                          const std::string& group_a, const std::string& group_b) {
  const auto lookup = [&](const std::string& value) {
    auto it = report.per_group_accuracy.find({attribute, value});
    if (it == report.per_group_accuracy.end()) {
      throw Error(ErrorCode::UnknownGroup, attribute + "=" + value + " not present");
    }
    return it->second;
  };
  DisparityReport out;
  out.attribute = attribute;
  out.group_a = group_a;
  out.group_b = group_b;
  out.accuracy_a = lookup(group_a);
  out.accuracy_b = lookup(group_b);
  out.disparity = disparity_points(out.accuracy_a, out.accuracy_b);
  return out;
}

double disparity_reduction(double before, double after) {
  if (!(before > 0.0)) {
    throw Error(ErrorCode::ZeroBaseline, "baseline disparity must be positive");
  }
  return 100.0 * (before - after) / before;
}

Json to_json(const MetricsReport& report) {
  Json groups = Json::object();
  Json group_support = Json::object();
  for (const auto& [key, accuracy] : report.per_group_accuracy) {
    groups[key.first][key.second] = accuracy;
    group_support[key.first][key.second] = report.per_group_support.at(key);
  }
  return {{"total", report.total},
          {"overall_accuracy", report.overall_accuracy},
          {"per_class_accuracy", report.per_class_accuracy},
          {"per_class_support", report.per_class_support},
          {"per_group_accuracy", std::move(groups)},
          {"per_group_support", std::move(group_support)},
          {"labels", report.labels},
          {"confusion", report.confusion}};
}

Json to_json(const DisparityReport& report) {
  return {{"attribute", report.attribute},
          {"group_a", report.group_a},
          {"group_b", report.group_b},
          {"accuracy_a", report.accuracy_a},
          {"accuracy_b", report.accuracy_b},
          {"disparity", report.disparity}};
}

std::string encode_checkpoint(const LinearClassifier& classifier) {
  const Json header = {{"vocabulary", classifier.vocabulary().labels()},
                       {"dim", classifier.dim()},
                       {"l2", classifier.l2()}};
  std::string out = header.dump();
  out += '\n';
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  io::put_u32(out, kCheckpointVersion);
  io::put_u32(out, static_cast<std::uint32_t>(classifier.classes()));
  io::put_u32(out, static_cast<std::uint32_t>(classifier.dim()));
  for (double v : classifier.weights()) io::put_f64(out, v);
  for (double v : classifier.bias()) io::put_f64(out, v);
  return out;
}

LinearClassifier decode_checkpoint(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos) {
    throw Error(ErrorCode::ParseError, "checkpoint header line missing");
  }
  Json header;
  try {
    header = Json::parse(bytes.substr(0, newline));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint header: ") + e.what());
  }
  const auto payload = bytes.substr(newline + 1);
  if (payload.size() < 16 || payload.substr(0, 4) != std::string_view(kCheckpointMagic, 4)) {
    throw Error(ErrorCode::BadMagic, "missing WSCK magic");
  }
  if (io::get_u32(payload, 4) != kCheckpointVersion) {
    throw Error(ErrorCode::BadVersion, "checkpoint version " + std::to_string(io::get_u32(payload, 4)));
  }
  const std::size_t classes = io::get_u32(payload, 8);
  const std::size_t dim = io::get_u32(payload, 12);
  ClassVocabulary vocabulary(header.at("vocabulary").get<std::vector<std::string>>());
  if (vocabulary.size() != classes || header.at("dim").get<std::size_t>() != dim) {
    throw Error(ErrorCode::LengthMismatch, "checkpoint header disagrees with payload shape");
  }
  const std::size_t values = classes * dim + classes;
  if (payload.size() < 16 + values * 8) {
    throw Error(ErrorCode::TruncatedPayload, "checkpoint payload too short");
  }
  std::vector<double> weights(classes * dim);
  std::vector<double> bias(classes);
  std::size_t offset = 16;
  for (auto& v : weights) {
    v = io::get_f64(payload, offset);
    offset += 8;
  }
  for (auto& v : bias) {
    v = io::get_f64(payload, offset);
    offset += 8;
  }
  return LinearClassifier(std::move(vocabulary), dim, header.at("l2").get<double>(),
                          std::move(weights), std::move(bias));
}

void save_checkpoint(const LinearClassifier& classifier, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_checkpoint(classifier));
}

LinearClassifier load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace weakspot
