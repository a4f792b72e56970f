#include "weakspot/pipeline.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <memory>

#include "weakspot/error.hpp"
#include "weakspot/io.hpp"
#include "weakspot/neighbor_index.hpp"

namespace weakspot {

namespace fs = std::filesystem;

namespace {

void log(const PipelineConfig& config, const std::string& message) {
  if (config.verbose) std::clog << "[weakspot] " << message << '\n';
}

// Re-throws library errors with the pipeline stage prepended.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.detail());
  }
}

fs::path resolve(const fs::path& base_dir, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

fs::path output_path(const PipelineConfig& config, const char* name) {
  return config.output_dir / name;
}

void write_json(const fs::path& path, const Json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

Json settings_json(const PipelineConfig& config) {
  Json channels = Json::array();
  for (auto c : config.procurement.channels) channels.push_back(to_string(c));
  return {{"audit", to_json(config.audit)},
          {"grid_d_values", config.grid_d_values},
          {"relevance_threshold", config.relevance_threshold},
          {"attribute_variants", config.attribute_variants},
          {"seed", config.seed},
          {"channels", channels},
          {"per_count", config.procurement.per_count},
          {"synthetic",
           {{"alpha", config.procurement.alpha},
            {"sigma", config.procurement.sigma.value_or(config.audit.radius / 4.0)}}},
          {"train", to_json(config.train)},
          {"finetune_from_scratch", config.finetune_from_scratch}};
}

std::vector<double> grid_values(const PipelineConfig& config) {
  return config.grid_d_values.empty() ? std::vector<double>{config.audit.radius}
                                      : config.grid_d_values;
}

LinearClassifier baseline_classifier(const PipelineConfig& config, const Workspace& ws) {
  if (config.baseline_checkpoint && fs::exists(*config.baseline_checkpoint)) {
    return load_checkpoint(*config.baseline_checkpoint);
  }
  TrainConfig train_config = config.train;
  train_config.warm_start = false;
  return train(ws.train, train_config);
}

std::vector<DisparityReport> disparities_for(const PipelineConfig& config,
                                             const MetricsReport& report) {
  std::vector<DisparityReport> out;
  for (const auto& g : config.disparity_groups) {
    try {
      out.push_back(disparity(report, g.attribute, g.group_a, g.group_b));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownGroup) throw;
      log(config, "skipping disparity " + g.attribute + ": " + e.detail());
    }
  }
  return out;
}

struct Audited {
  std::vector<Prediction> test_predictions;
  LabelMap reference_predictions;
};

Audited predict_all(const LinearClassifier& classifier, const Workspace& ws,
                    ReferenceSet reference) {
  Audited out;
  out.test_predictions = predict(classifier, ws.test);
  out.reference_predictions = reference == ReferenceSet::test
                                  ? prediction_map(out.test_predictions)
                                  : prediction_map(predict(classifier, ws.reference));
  return out;
}

ClassVocabulary evaluation_vocabulary(const Workspace& ws, const LinearClassifier& classifier) {
  ClassVocabulary vocabulary = ws.test.vocabulary();
  for (const auto& label : classifier.vocabulary().labels()) vocabulary.add(label);
  return vocabulary;
}

Json failures_json(const std::vector<FulfillFailure>& failures) {
  Json out = Json::array();
  for (const auto& f : failures) {
    out.push_back({{"request_id", f.request_id}, {"code", to_string(f.code)}, {"message", f.message}});
  }
  return out;
}

std::vector<float> mean_of(const DatasetBundle& bundle, const std::vector<std::size_t>& rows) {
  std::vector<double> acc(bundle.dim(), 0.0);
  for (auto r : rows) {
    const auto v = bundle.vector(r);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += v[d];
  }
  std::vector<float> out(acc.size());
  for (std::size_t d = 0; d < acc.size(); ++d) {
    out[d] = static_cast<float>(acc[d] / static_cast<double>(rows.size()));
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  audit.validate();
  train.validate();
  if (procurement.per_count == 0) throw Error(ErrorCode::InvalidConfig, "per_count must be positive");
  if (!(procurement.alpha >= 0.0 && procurement.alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "synthetic alpha outside [0,1]");
  }
  if (procurement.sigma && !(*procurement.sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "synthetic sigma must be >= 0");
  }
  for (double d : grid_d_values) {
    if (!(d >= 0.0)) throw Error(ErrorCode::InvalidConfig, "grid radii must be non-negative");
  }
}

PipelineConfig pipeline_config_from_json(const Json& j, const fs::path& base_dir) {
  PipelineConfig config;
  try {
    const auto path_of = [&](const char* key) {
      return resolve(base_dir, fs::path(j.at(key).get<std::string>()));
    };
    config.train_store = path_of("train_store");
    config.train_manifest = path_of("train_manifest");
    config.test_store = path_of("test_store");
    config.test_manifest = path_of("test_manifest");
    if (auto it = j.find("baseline_checkpoint"); it != j.end() && !it->is_null()) {
      config.baseline_checkpoint = resolve(base_dir, fs::path(it->get<std::string>()));
    }
    if (auto it = j.find("audit"); it != j.end()) config.audit = audit_config_from_json(*it);
    config.grid_d_values = j.value("grid_d_values", config.grid_d_values);
    config.relevance_threshold = j.value("relevance_threshold", config.relevance_threshold);
    config.attribute_variants = j.value("attribute_variants", config.attribute_variants);
    for (const auto& g : j.value("disparity_groups", Json::array())) {
      config.disparity_groups.push_back({g.at("attribute").get<std::string>(),
                                         g.at("group_a").get<std::string>(),
                                         g.at("group_b").get<std::string>()});
    }
    if (auto it = j.find("procurement"); it != j.end()) {
      auto& p = config.procurement;
      if (auto ch = it->find("channels"); ch != it->end()) {
        p.channels.clear();
        for (const auto& c : *ch) p.channels.push_back(parse_channel(c.get<std::string>()));
      }
      p.per_count = it->value("per_count", p.per_count);
      p.web_endpoint = it->value("web_endpoint", p.web_endpoint);
      p.txt2img_endpoint = it->value("txt2img_endpoint", p.txt2img_endpoint);
      p.embedder_endpoint = it->value("embedder_endpoint", p.embedder_endpoint);
      if (auto fx = it->find("fixture_dir"); fx != it->end() && !fx->is_null()) {
        p.fixture_dir = resolve(base_dir, fs::path(fx->get<std::string>()));
      }
      p.cache_dir = it->value("cache_dir", p.cache_dir.string());
      p.alpha = it->value("alpha", p.alpha);
      if (auto s = it->find("sigma"); s != it->end() && !s->is_null()) p.sigma = s->get<double>();
    }
    if (auto it = j.find("train"); it != j.end()) config.train = train_config_from_json(*it);
    config.finetune_from_scratch = j.value("finetune_from_scratch", config.finetune_from_scratch);
    config.seed = j.value("seed", config.seed);
    config.output_dir = resolve(base_dir, fs::path(j.value("output_dir", std::string("out"))));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  config.validate();
  return config;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(io::read_file(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j, path.parent_path());
}

Json to_json(const PipelineConfig& config) {
  Json channels = Json::array();
  for (auto c : config.procurement.channels) channels.push_back(to_string(c));
  Json groups = Json::array();
  for (const auto& g : config.disparity_groups) {
    groups.push_back({{"attribute", g.attribute}, {"group_a", g.group_a}, {"group_b", g.group_b}});
  }
  Json procurement = {{"channels", channels},
                      {"per_count", config.procurement.per_count},
                      {"web_endpoint", config.procurement.web_endpoint},
                      {"txt2img_endpoint", config.procurement.txt2img_endpoint},
                      {"embedder_endpoint", config.procurement.embedder_endpoint},
                      {"fixture_dir", config.procurement.fixture_dir.string()},
                      {"cache_dir", config.procurement.cache_dir.string()},
                      {"alpha", config.procurement.alpha},
                      {"sigma", config.procurement.sigma ? Json(*config.procurement.sigma)
                                                         : Json(nullptr)}};
  return {{"train_store", config.train_store.string()},
          {"train_manifest", config.train_manifest.string()},
          {"test_store", config.test_store.string()},
          {"test_manifest", config.test_manifest.string()},
          {"baseline_checkpoint",
           config.baseline_checkpoint ? Json(config.baseline_checkpoint->string()) : Json(nullptr)},
          {"audit", to_json(config.audit)},
          {"grid_d_values", config.grid_d_values},
          {"relevance_threshold", config.relevance_threshold},
          {"attribute_variants", config.attribute_variants},
          {"disparity_groups", groups},
          {"procurement", procurement},
          {"train", to_json(config.train)},
          {"finetune_from_scratch", config.finetune_from_scratch},
          {"seed", config.seed},
          {"output_dir", config.output_dir.string()}};
}

PipelineConfig benchmark_pipeline_config(const BenchmarkSpec& spec, const fs::path& data_dir) {
  PipelineConfig config;
  config.train_store = data_dir / "train.wsem";
  config.train_manifest = data_dir / "train.jsonl";
  config.test_store = data_dir / "test.wsem";
  config.test_manifest = data_dir / "test.jsonl";

  const double radius = spec.planted_radius();
  config.audit.k = 100;
  config.audit.radius = radius;
  config.audit.perplexity_threshold = 0.70;
  config.audit.min_neighbors = 5;
  config.grid_d_values = {0.25 * radius, 0.5 * radius, radius, 1.5 * radius, 2.0 * radius};
  config.disparity_groups = {{spec.subgroup.attribute, spec.subgroup.majority_value,
                              spec.subgroup.minority_value}};

  config.procurement.channels = {Channel::synthetic};
  config.procurement.per_count = 20;
  // Pull procured samples only slightly toward the class centre so they land
  // in the weak region rather than in the bulk of the class.
  config.procurement.alpha = 0.05;

  // Strong shrinkage keeps the baseline from memorising the minority slice.
  config.train.learning_rate = 0.1;
  config.train.epochs = 200;
  config.train.l2 = 0.1;
  config.train.seed = spec.seed;

  config.seed = spec.seed;
  config.output_dir = data_dir / "out";
  return config;
}

PipelineConfig write_benchmark(const BenchmarkSpec& spec, const fs::path& dir) {
  const auto bench = make_benchmark(spec);
  fs::create_directories(dir);
  save_embedding_store(bench.train.store(), dir / "train.wsem");
  save_manifest(bench.train.records(), dir / "train.jsonl");
  save_embedding_store(bench.test.store(), dir / "test.wsem");
  save_manifest(bench.test.records(), dir / "test.jsonl");
  write_json(dir / "benchmark_spec.json", to_json(spec));

  // The written config uses paths relative to `dir`.
  auto relative = benchmark_pipeline_config(spec, "");
  relative.output_dir = "out";
  write_json(dir / "pipeline.json", to_json(relative));
  return benchmark_pipeline_config(spec, dir);
}

Workspace load_workspace(const PipelineConfig& config) {
  return stage("load", [&] {
    auto train_all = load_bundle(config.train_store, config.train_manifest);
    auto train = train_all.select([](const Record& r) { return r.split == Split::train; });
    auto test = bind_records(load_embedding_store(config.test_store), load_manifest(config.test_manifest),
                     train.vocabulary());
    if (test.dim() != train.dim() && test.count() > 0) {
      throw Error(ErrorCode::DimMismatch, "train and test embeddings differ in dim");
    }
    DatasetBundle reference;
    switch (config.audit.reference) {
      case ReferenceSet::test: reference = test; break;
      case ReferenceSet::train: reference = train; break;
      case ReferenceSet::all: reference = merge(train, test); break;
    }
    return Workspace{std::move(train), std::move(test), std::move(reference)};
  });
}

Json AuditReport::to_json() const {
  Json disparity_json = Json::array();
  for (const auto& d : disparities) disparity_json.push_back(weakspot::to_json(d));
  Json weakspot_json = Json::array();
  for (const auto& w : weakspots) weakspot_json.push_back(weakspot::to_json(w));
  Json association_json = Json::array();
  for (const auto& a : associations) association_json.push_back(weakspot::to_json(a));
  Json shortlist_json = Json::array();
  for (const auto& item : shortlist) {
    shortlist_json.push_back({{"object_label", item.key.object_label},
                              {"predicted_class", item.key.predicted_class},
                              {"support", item.association.support}});
  }
  return {{"baseline", weakspot::to_json(baseline)},
          {"disparities", disparity_json},
          {"weakspots", weakspot_json},
          {"pair_summary", weakspot::to_json(pair_summary(weakspots))},
          {"grid", weakspot::to_json(grid)},
          {"associations", association_json},
          {"shortlist", {{"count", shortlist.size()}, {"items", shortlist_json}}},
          {"settings", settings}};
}

Json EnhanceReport::to_json() const {
  Json disparity_json = Json::array();
  for (const auto& d : disparities) {
    disparity_json.push_back({{"attribute", d.before.attribute},
                              {"group_a", d.before.group_a},
                              {"group_b", d.before.group_b},
                              {"before", weakspot::to_json(d.before)},
                              {"after", weakspot::to_json(d.after)},
                              {"reduction", d.reduction ? Json(*d.reduction) : Json(nullptr)}});
  }
  return {{"before", weakspot::to_json(before)},
          {"after", weakspot::to_json(after)},
          {"overall_accuracy_delta", after.overall_accuracy - before.overall_accuracy},
          {"disparities", disparity_json},
          {"procurement",
           {{"descriptions", procurement.descriptions},
            {"skipped_missing_caption", procurement.skipped_missing_caption},
            {"requests", procurement.requests},
            {"fulfilled_records", procurement.fulfilled_records},
            {"failures", failures_json(procurement.failures)},
            {"base_train_count", procurement.base_train_count},
            {"augmentation_fraction", procurement.augmentation_fraction},
            {"sample_validation", "none; procured samples are limited by count only"}}},
          {"grid_before", weakspot::to_json(grid_before)},
          {"grid_after", weakspot::to_json(grid_after)},
          {"weakspots_before", weakspots_before},
          {"weakspots_after", weakspots_after},
          {"settings", settings}};
}

AuditReport run_audit(const PipelineConfig& config) {
  config.validate();
  const auto ws = load_workspace(config);

  log(config, "training baseline on " + std::to_string(ws.train.count()) + " records");
  const auto classifier = stage("train", [&] { return baseline_classifier(config, ws); });
  save_checkpoint(classifier, output_path(config, kBaselineCheckpoint));

  AuditReport report;
  report.settings = settings_json(config);
  const auto predicted = stage("predict", [&] { return predict_all(classifier, ws, config.audit.reference); });
  report.baseline = stage("evaluate", [&] {
    return evaluate(predicted.test_predictions, ws.test.records(), evaluation_vocabulary(ws, classifier));
  });
  report.disparities = disparities_for(config, report.baseline);

  const auto index = NeighborIndex::build(ws.reference, [](const Record&) { return true; });
  report.weakspots = stage("detect", [&] {
    return detect(ws.reference, predicted.reference_predictions, index, config.audit);
  });
  const auto d_values = grid_values(config);
  report.grid = stage("grid", [&] {
    return grid(ws.reference, predicted.reference_predictions, index, d_values,
                config.audit.perplexity_threshold, config.audit);
  });
  log(config, std::to_string(report.weakspots.size()) + " weakspots at radius " +
                  std::to_string(config.audit.radius));

  report.associations = stage("associations", [&] {
    return mine(ws.reference.records(), predicted.reference_predictions, config.relevance_threshold);
  });
  report.shortlist = shortlist(report.associations, report.weakspots);
  stage("review", [&] {
    ReviewStore store(output_path(config, kReviewStateFile));
    store.refresh(report.shortlist);
    return 0;
  });

  write_json(output_path(config, kAuditReportFile), report.to_json());
  return report;
}

std::vector<Weakspot> load_audit_weakspots(const PipelineConfig& config) {
  const auto path = output_path(config, kAuditReportFile);
  if (!fs::exists(path)) {
    throw Error(ErrorCode::IoFailure, "no audit report at " + path.string() + "; run audit first");
  }
  std::vector<Weakspot> weakspots;
  try {
    const auto report = Json::parse(io::read_file(path));
    for (const auto& w : report.at("weakspots")) {
      weakspots.push_back(weakspot_from_json(w));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return weakspots;
}

DescriptionBuild current_descriptions(const PipelineConfig& config, const Workspace& workspace,
                                      const ReviewQueue& review) {
  const auto weakspots = load_audit_weakspots(config);
  const auto spurious = review.spurious();
  return build_set(weakspots, spurious, workspace.reference, config.attribute_variants);
}

EnhanceReport run_enhance(const PipelineConfig& config, const ReviewQueue& review) {
  config.validate();
  const auto ws = load_workspace(config);
  const auto baseline_path = config.baseline_checkpoint.value_or(output_path(config, kBaselineCheckpoint));
  const auto baseline = stage("load", [&] { return load_checkpoint(baseline_path); });

  EnhanceReport report;
  report.settings = settings_json(config);

  // Descriptions.
  const auto build = stage("describe", [&] { return current_descriptions(config, ws, review); });
  io::write_file_atomic(output_path(config, kPromptsFile), encode_descriptions(build.set));
  report.procurement.descriptions = build.set.size();
  report.procurement.skipped_missing_caption = build.skipped_missing_caption;

  // Channels and providers.
  std::vector<Channel> channels;
  const bool have_fixtures = !config.procurement.fixture_dir.empty();
  for (auto c : config.procurement.channels) {
    if (config.offline && c != Channel::synthetic && !have_fixtures) {
      log(config, "offline: dropping channel " + std::string(to_string(c)));
      continue;
    }
    channels.push_back(c);
  }
  std::unique_ptr<ImageProvider> web;
  std::unique_ptr<ImageProvider> txt2img;
  std::unique_ptr<Embedder> embedder;
  const auto& p = config.procurement;
  const auto make_provider = [&](const std::string& endpoint) -> std::unique_ptr<ImageProvider> {
    if (!config.offline && !endpoint.empty()) return std::make_unique<HttpImageProvider>(endpoint);
    if (have_fixtures) return std::make_unique<FixtureImageProvider>(p.fixture_dir);
    return nullptr;
  };
  web = make_provider(p.web_endpoint);
  txt2img = make_provider(p.txt2img_endpoint);
  if (!config.offline && !p.embedder_endpoint.empty()) {
    embedder = std::make_unique<HttpEmbedder>(p.embedder_endpoint);
  } else if (have_fixtures) {
    embedder = std::make_unique<FixtureEmbedder>(p.fixture_dir);
  }

  const auto requests = plan(build.set, channels, p.per_count);
  io::write_file_atomic(output_path(config, kProcurementFile), encode_requests(requests));
  report.procurement.requests = requests.size();

  // Class centroids over the training split anchor the synthetic channel.
  std::map<std::string, std::vector<std::size_t>> rows_by_class;
  for (std::size_t i = 0; i < ws.train.count(); ++i) {
    rows_by_class[ws.train.records()[i].true_class].push_back(i);
  }
  std::map<std::string, std::vector<float>> centroids;
  for (const auto& [label, rows] : rows_by_class) centroids[label] = mean_of(ws.train, rows);

  FulfillContext context;
  context.web = web.get();
  context.txt2img = txt2img.get();
  context.embedder = embedder.get();
  context.dim = ws.train.dim();
  context.cache_dir = config.output_dir / p.cache_dir;
  context.synthetic = {p.alpha, p.sigma.value_or(config.audit.radius / 4.0), config.seed};
  context.anchors = [&](const ProcurementRequest& request) {
    const auto& target = request.description.target_class;
    auto centre = centroids.find(target);
    if (centre == centroids.end()) {
      throw Error(ErrorCode::UnknownClass, "no training samples of '" + target + "' to anchor on");
    }
    SyntheticAnchor anchor{centre->second, centre->second};
    if (request.pivotal_id) {
      const auto row = ws.reference.find(*request.pivotal_id);
      if (!row) throw Error(ErrorCode::InvalidArgument, "pivotal '" + *request.pivotal_id + "' unknown");
      const auto v = ws.reference.vector(*row);
      anchor.pivotal.assign(v.begin(), v.end());
      return anchor;
    }
    // Mitigation prompts anchor on target-class records that show the
    // object, falling back to the class centre when there are none.
    for (const auto& tag : request.description.tags) {
      if (tag.rfind("object:", 0) != 0) continue;
      const auto object = tag.substr(7);
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < ws.reference.count(); ++i) {
        const auto& record = ws.reference.records()[i];
        const auto& objects = record.objects;
        if (!objects || record.true_class != target) continue;
        for (const auto& o : *objects) {
          if (o.label == object && o.relevance >= config.relevance_threshold) {
            rows.push_back(i);
            break;
          }
        }
      }
      if (!rows.empty()) anchor.pivotal = mean_of(ws.reference, rows);
    }
    return anchor;
  };

  const auto fulfilled = fulfill(requests, context);
  report.procurement.failures = fulfilled.failures;
  for (const auto& f : fulfilled.failures) log(config, "procurement failed: " + f.message);

  // Merge the procured batches onto the training split.
  EmbeddingStore added_store(ws.train.dim());
  std::vector<Record> added_records;
  for (const auto& batch : fulfilled.batches) {
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
      added_store.append(batch.embeddings.row(i));
      added_records.push_back(batch.records[i]);
    }
  }
  const auto merged = stage("merge", [&] {
    return merge(ws.train, bind_records(std::move(added_store), std::move(added_records), ws.train.vocabulary()));
  });
  const std::size_t added = merged.count() - ws.train.count();
  report.procurement.fulfilled_records = added;
  report.procurement.base_train_count = ws.train.count();
  report.procurement.augmentation_fraction = augmentation_fraction(added, ws.train.count());
  log(config, "procured " + std::to_string(added) + " samples from " +
                  std::to_string(requests.size()) + " requests");

  TrainConfig finetune_config = config.train;
  finetune_config.warm_start = !config.finetune_from_scratch;
  const auto enhanced = stage("finetune", [&] { return finetune(baseline, merged, finetune_config); });
  save_checkpoint(enhanced, output_path(config, kEnhancedCheckpoint));

  // Before and after on the identical test split, grid and threshold.
  const auto before = stage("predict", [&] { return predict_all(baseline, ws, config.audit.reference); });
  const auto after = stage("predict", [&] { return predict_all(enhanced, ws, config.audit.reference); });
  report.before = evaluate(before.test_predictions, ws.test.records(), evaluation_vocabulary(ws, baseline));
  report.after = evaluate(after.test_predictions, ws.test.records(), evaluation_vocabulary(ws, enhanced));

  const auto before_disparities = disparities_for(config, report.before);
  const auto after_disparities = disparities_for(config, report.after);
  for (const auto& b : before_disparities) {
    for (const auto& a : after_disparities) {
      if (a.attribute != b.attribute || a.group_a != b.group_a || a.group_b != b.group_b) continue;
      DisparityChange change{b, a, std::nullopt};
      if (b.disparity > 0.0) change.reduction = disparity_reduction(b.disparity, a.disparity);
      report.disparities.push_back(change);
    }
  }

  const auto index = NeighborIndex::build(ws.reference, [](const Record&) { return true; });
  const auto d_values = grid_values(config);
  stage("grid", [&] {
    report.grid_before = grid(ws.reference, before.reference_predictions, index, d_values,
                              config.audit.perplexity_threshold, config.audit);
    report.grid_after = grid(ws.reference, after.reference_predictions, index, d_values,
                             config.audit.perplexity_threshold, config.audit);
    report.weakspots_before = detect(ws.reference, before.reference_predictions, index, config.audit).size();
    report.weakspots_after = detect(ws.reference, after.reference_predictions, index, config.audit).size();
    return 0;
  });

  write_json(output_path(config, kEnhanceReportFile), report.to_json());
  return report;
}

}  // namespace weakspot
