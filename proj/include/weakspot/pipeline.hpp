#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "weakspot/association_review.hpp"
#include "weakspot/benchmark.hpp"
#include "weakspot/core_data.hpp"
#include "weakspot/learner_metrics.hpp"
#include "weakspot/procurement.hpp"
#include "weakspot/prompt_forge.hpp"
#include "weakspot/weakspot_audit.hpp"

namespace weakspot {

struct DisparityGroup {
  std::string attribute;
  std::string group_a;
  std::string group_b;
};

struct ProcurementConfig {
  std::vector<Channel> channels = {Channel::synthetic};
  std::size_t per_count = 20;
  std::string web_endpoint;
  std::string txt2img_endpoint;
  std::string embedder_endpoint;
  std::filesystem::path fixture_dir;
  std::filesystem::path cache_dir = "cache";  // relative to output_dir
  double alpha = 0.5;
  std::optional<double> sigma;  // unset: audit radius / 4
};

struct PipelineConfig {
  std::filesystem::path train_store;
  std::filesystem::path train_manifest;
  std::filesystem::path test_store;
  std::filesystem::path test_manifest;
  std::optional<std::filesystem::path> baseline_checkpoint;

  AuditConfig audit;
  std::vector<double> grid_d_values;
  double relevance_threshold = kDefaultRelevanceThreshold;
  std::vector<std::string> attribute_variants;
  std::vector<DisparityGroup> disparity_groups;

  ProcurementConfig procurement;
  TrainConfig train;
  bool finetune_from_scratch = false;

  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  bool offline = false;
  bool verbose = false;

  void validate() const;
};

/// Relative paths in the file resolve against the file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
Json to_json(const PipelineConfig& config);

/// Frozen pipeline settings for a benchmark written to `data_dir`.
PipelineConfig benchmark_pipeline_config(const BenchmarkSpec& spec,
                                         const std::filesystem::path& data_dir);

/// Writes train/test stores and manifests plus pipeline.json into `dir`.
PipelineConfig write_benchmark(const BenchmarkSpec& spec, const std::filesystem::path& dir);

// Output files, relative to output_dir.
inline constexpr const char* kBaselineCheckpoint = "baseline.ckpt";
inline constexpr const char* kEnhancedCheckpoint = "enhanced.ckpt";
inline constexpr const char* kAuditReportFile = "audit_report.json";
inline constexpr const char* kEnhanceReportFile = "enhance_report.json";
inline constexpr const char* kReviewStateFile = "review_state.json";
inline constexpr const char* kPromptsFile = "prompts.jsonl";
inline constexpr const char* kProcurementFile = "procurement.jsonl";

struct Workspace {
  DatasetBundle train;
  DatasetBundle test;
  DatasetBundle reference;  // the set the audit searches
};

Workspace load_workspace(const PipelineConfig& config);

struct AuditReport {
  MetricsReport baseline;
  std::vector<DisparityReport> disparities;
  std::vector<Weakspot> weakspots;
  GridReport grid;
  std::vector<Association> associations;
  std::vector<ReviewItem> shortlist;
  Json settings;

  Json to_json() const;
};

struct ProcurementSummary {
  std::size_t descriptions = 0;
  std::size_t skipped_missing_caption = 0;
  std::size_t requests = 0;
  std::size_t fulfilled_records = 0;
  std::vector<FulfillFailure> failures;
  std::size_t base_train_count = 0;
  double augmentation_fraction = 0.0;
};

struct DisparityChange {
  DisparityReport before;
  DisparityReport after;
  std::optional<double> reduction;  // unset when the baseline disparity is zero
};

struct EnhanceReport {
  MetricsReport before;
  MetricsReport after;
  std::vector<DisparityChange> disparities;
  ProcurementSummary procurement;
  GridReport grid_before;
  GridReport grid_after;
  std::size_t weakspots_before = 0;
  std::size_t weakspots_after = 0;
  Json settings;

  Json to_json() const;
};

/// Baseline train (or checkpoint load), predict, detect, grid, mine,
/// shortlist. Persists the report, checkpoint and refreshed review state.
AuditReport run_audit(const PipelineConfig& config);

/// Descriptions from pivotals and spurious verdicts, procurement, merge,
/// fine-tune, re-evaluation and re-audit on the same test split and grid.
EnhanceReport run_enhance(const PipelineConfig& config, const ReviewQueue& review);

/// Descriptions the current review state would produce.
DescriptionBuild current_descriptions(const PipelineConfig& config, const Workspace& workspace,
                                      const ReviewQueue& review);

std::vector<Weakspot> load_audit_weakspots(const PipelineConfig& config);

}  // namespace weakspot
