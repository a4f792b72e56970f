// Sweeps benchmark seeds and checks that the frozen geometry keeps its planted
// properties: the baseline misses the subgroup, the audit finds it, and the
// synthetic enhancement repairs it.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "weakspot/benchmark.hpp"
#include "weakspot/error.hpp"
#include "weakspot/io.hpp"
#include "weakspot/pipeline.hpp"

namespace fs = std::filesystem;
using namespace weakspot;

namespace {

struct SeedResult {
  double subgroup_misclassified = 0.0;  // percent of test subgroup
  std::size_t planted_pair = 0;
  double pivotal_share = 0.0;  // percent of pivotals inside the subgroup
  double disparity_reduction = 0.0;
  double accuracy_delta = 0.0;
  std::size_t weakspots_before = 0;
  std::size_t weakspots_after = 0;

  bool detection_ok() const {
    return subgroup_misclassified >= 60.0 && planted_pair >= 1 && pivotal_share >= 90.0;
  }
  bool enhancement_ok() const {
    return disparity_reduction >= 50.0 && accuracy_delta >= -1.0 && weakspots_before > 0 &&
           5 * weakspots_after <= weakspots_before;
  }
};

SeedResult run_seed(const BenchmarkSpec& spec, const fs::path& dir) {
  auto config = write_benchmark(spec, dir);
  config.offline = true;
  const auto audit = run_audit(config);
  const auto workspace = load_workspace(config);
  const auto predictions = predict(load_checkpoint(config.output_dir / kBaselineCheckpoint), workspace.test);

  SeedResult r;
  std::size_t members = 0, wrong = 0;
  for (std::size_t i = 0; i < workspace.test.count(); ++i) {
    const auto& record = workspace.test.records()[i];
    if (!in_planted_subgroup(record, spec)) continue;
    ++members;
    wrong += predictions[i].predicted_class != record.true_class ? 1 : 0;
  }
  r.subgroup_misclassified = members ? 100.0 * wrong / members : 0.0;

  const auto labels = spec.class_labels();
  std::size_t inside = 0;
  for (const auto& w : audit.weakspots) {
    if (w.true_class == labels[spec.subgroup.source_class] && w.predicted_class == labels[spec.subgroup.target_class]) {
      ++r.planted_pair;
    }
    const auto row = workspace.reference.find(w.pivotal_id);
    if (row && in_planted_subgroup(workspace.reference.records()[*row], spec)) ++inside;
  }
  r.pivotal_share = audit.weakspots.empty() ? 0.0 : 100.0 * inside / audit.weakspots.size();

  const auto enhance = run_enhance(config, ReviewQueue{});
  if (!enhance.disparities.empty() && enhance.disparities[0].reduction) {
    r.disparity_reduction = *enhance.disparities[0].reduction;
  }
  r.accuracy_delta = enhance.after.overall_accuracy - enhance.before.overall_accuracy;
  r.weakspots_before = enhance.weakspots_before;
  r.weakspots_after = enhance.weakspots_after;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verify the planted benchmark geometry across seeds"};
  std::string spec_path;
  std::uint64_t first = 1;
  std::size_t count = 20;
  app.add_option("--spec", spec_path, "benchmark spec JSON (frozen defaults when omitted)");
  app.add_option("--first-seed", first, "first seed of the sweep");
  app.add_option("--seeds", count, "number of consecutive seeds")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    BenchmarkSpec spec;
    if (!spec_path.empty()) spec = benchmark_spec_from_json(Json::parse(io::read_file(spec_path)));

    std::string pattern = (fs::temp_directory_path() / "weakspot-verify-XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw Error(ErrorCode::IoFailure, "cannot create a scratch directory");
    const fs::path scratch = pattern;

    std::printf("%6s %12s %7s %9s %11s %9s %12s  %s\n", "seed", "missed(%)", "pair", "inside(%)",
                "reduce(%)", "d_acc", "weakspots", "result");
    std::size_t failures = 0;
    for (std::uint64_t seed = first; seed < first + count; ++seed) {
      spec.seed = seed;
      const auto r = run_seed(spec, scratch / std::to_string(seed));
      const bool ok = r.detection_ok() && r.enhancement_ok();
      failures += ok ? 0 : 1;
      std::printf("%6llu %12.1f %7zu %9.1f %11.1f %+9.2f %5zu -> %-4zu  %s\n",
                  static_cast<unsigned long long>(seed), r.subgroup_misclassified, r.planted_pair,
                  r.pivotal_share, r.disparity_reduction, r.accuracy_delta, r.weakspots_before,
                  r.weakspots_after, ok ? "ok" : (r.detection_ok() ? "enhance" : "detect"));
    }
    std::error_code ec;
    fs::remove_all(scratch, ec);
    std::printf("%zu of %zu seeds keep every property\n", count - failures, count);
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
