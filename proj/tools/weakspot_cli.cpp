#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>

#include "weakspot/error.hpp"
#include "weakspot/io.hpp"
#include "weakspot/pipeline.hpp"
#include "weakspot/service.hpp"

namespace fs = std::filesystem;
using namespace weakspot;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool offline = false;
  bool verbose = false;
};

void add_common(CLI::App* app, CommonFlags& flags, bool config_required = true) {
  auto* opt = app->add_option("--config", flags.config, "pipeline config JSON");
  if (config_required) opt->required();
  app->add_option("--seed", flags.seed, "override the configured seed");
  app->add_option("--out", flags.out, "override the output directory");
  app->add_flag("--offline", flags.offline, "synthetic and fixture channels only");
  app->add_flag("-v,--verbose", flags.verbose, "log progress to stderr");
}

PipelineConfig resolve_config(const CommonFlags& flags) {
  auto config = load_pipeline_config(flags.config);
  if (flags.seed) {
    config.seed = *flags.seed;
    config.train.seed = *flags.seed;
  }
  if (!flags.out.empty()) config.output_dir = flags.out;
  config.offline = flags.offline;
  config.verbose = flags.verbose;
  return config;
}

Service* running_service = nullptr;

void handle_signal(int) {
  if (running_service) running_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakspot audit and data-enhancement pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* benchmark = app.add_subcommand("benchmark", "write the planted-weakspot benchmark dataset");
  std::string spec_path;
  benchmark->add_option("--spec", spec_path, "benchmark spec JSON (defaults when omitted)");
  benchmark->add_option("--seed", flags.seed, "override the spec seed");
  benchmark->add_option("--out", flags.out, "output directory")->required();

  auto* audit = app.add_subcommand("audit", "train the baseline and detect weakspots");
  add_common(audit, flags);

  auto* enhance = app.add_subcommand("enhance", "procure samples for the audited weakspots and fine-tune");
  add_common(enhance, flags);

  auto* report = app.add_subcommand("report", "pretty-print a report");
  std::string which = "audit";
  add_common(report, flags);
  report->add_option("--which", which, "audit or enhance")->check(CLI::IsMember({"audit", "enhance"}));

  auto* serve = app.add_subcommand("serve", "serve the review API");
  std::string host = "127.0.0.1";
  int port = 8080;
  add_common(serve, flags);
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "bind port (0 picks a free one)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (benchmark->parsed()) {
      BenchmarkSpec spec;
      if (!spec_path.empty()) spec = benchmark_spec_from_json(Json::parse(io::read_file(spec_path)));
      if (flags.seed) spec.seed = *flags.seed;
      spec.validate();
      write_benchmark(spec, flags.out);
      std::cout << "wrote benchmark to " << flags.out << " (config: "
                << (fs::path(flags.out) / "pipeline.json").string() << ")\n";
    } else if (audit->parsed()) {
      const auto config = resolve_config(flags);
      const auto result = run_audit(config);
      std::cout << "baseline accuracy " << result.baseline.overall_accuracy << "%, "
                << result.weakspots.size() << " weakspots, " << result.shortlist.size()
                << " associations shortlisted\n";
    } else if (enhance->parsed()) {
      const auto config = resolve_config(flags);
      const auto review = load_review_queue(config.output_dir / kReviewStateFile);
      const auto result = run_enhance(config, review);
      std::cout << "accuracy " << result.before.overall_accuracy << "% -> "
                << result.after.overall_accuracy << "%, weakspots " << result.weakspots_before
                << " -> " << result.weakspots_after << ", " << result.procurement.fulfilled_records
                << " samples procured\n";
      for (const auto& d : result.disparities) {
        std::cout << "disparity " << d.before.attribute << ": " << d.before.disparity << " -> "
                  << d.after.disparity << " pts";
        if (d.reduction) std::cout << " (" << *d.reduction << "% reduction)";
        std::cout << '\n';
      }
    } else if (report->parsed()) {
      const auto config = resolve_config(flags);
      const auto path = config.output_dir / (which == "audit" ? kAuditReportFile : kEnhanceReportFile);
      std::cout << Json::parse(io::read_file(path)).dump(2) << '\n';
    } else if (serve->parsed()) {
      const auto config = resolve_config(flags);
      Service service(config);
      running_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cout << "serving on " << host << ":" << port << std::endl;
      service.run(host, port);
      running_service = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
