#include "weakspot/service.hpp"

#include <httplib.h>

#include <filesystem>

#include "weakspot/error.hpp"
#include "weakspot/io.hpp"
#include "weakspot/neighbor_index.hpp"

namespace weakspot {

namespace fs = std::filesystem;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownKey:
    case ErrorCode::UnknownObjectId:
      return 404;
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
      return 400;
    case ErrorCode::IoFailure:
      return 409;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, {{"error", std::string(to_string(code))}, {"message", message}}, status_for(code));
}

std::optional<Json> read_report(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return Json::parse(io::read_file(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

Json require_report(const fs::path& path) {
  auto report = read_report(path);
  if (!report) throw Error(ErrorCode::IoFailure, path.filename().string() + " not found; run audit first");
  return *report;
}

std::optional<double> number_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  const auto text = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be a number, got '" + text + "'");
  }
}

bool class_filter_passes(const httplib::Request& req, const Weakspot& w) {
  if (req.has_param("true_class") && req.get_param_value("true_class") != w.true_class) return false;
  if (req.has_param("predicted_class") && req.get_param_value("predicted_class") != w.predicted_class) {
    return false;
  }
  return true;
}

// Wraps a handler so library errors become JSON error bodies.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.detail());
    } catch (const Json::exception& e) {
      send_error(res, ErrorCode::ParseError, e.what());
    }
  };
}

}  // namespace

Service::Service(PipelineConfig config)
    : config_(std::move(config)),
      review_(config_.output_dir / kReviewStateFile),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() { stop(); }

const Workspace& Service::workspace() {
  std::lock_guard lock(cache_mutex_);
  if (!workspace_) workspace_ = load_workspace(config_);
  return *workspace_;
}

LabelMap Service::reference_predictions() {
  const auto& ws = workspace();
  std::lock_guard lock(cache_mutex_);
  if (!predictions_) {
    const auto path = config_.baseline_checkpoint.value_or(config_.output_dir / kBaselineCheckpoint);
    if (!fs::exists(path)) throw Error(ErrorCode::IoFailure, "baseline checkpoint not found; run audit first");
    predictions_ = prediction_map(predict(load_checkpoint(path), ws.reference));
  }
  return *predictions_;
}

void Service::install_routes() {
  auto& s = *server_;
  const auto audit_path = config_.output_dir / kAuditReportFile;
  const auto enhance_path = config_.output_dir / kEnhanceReportFile;

  s.Get("/api/report", guarded([=](const httplib::Request&, httplib::Response& res) {
    const auto audit = read_report(audit_path);
    const auto enhance = read_report(enhance_path);
    send_json(res, {{"audit", audit ? *audit : Json(nullptr)}, {"enhance", enhance ? *enhance : Json(nullptr)}});
  }));

  s.Get("/api/weakspots", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
    const auto d = number_param(req, "d");
    const auto tperp = number_param(req, "tperp");
    AuditConfig audit = config_.audit;
    std::vector<Weakspot> weakspots;
    if (!d && !tperp) {
      const auto report = require_report(audit_path);
      for (const auto& w : report.at("weakspots")) weakspots.push_back(weakspot_from_json(w));
    } else {
      if (d) audit.radius = *d;
      if (tperp) audit.perplexity_threshold = *tperp;
      audit.validate();
      const auto predictions = reference_predictions();
      const auto& ws = workspace();
      const auto index = NeighborIndex::build(ws.reference, [](const Record&) { return true; });
      weakspots = detect(ws.reference, predictions, index, audit);
    }
    Json items = Json::array();
    for (const auto& w : weakspots) {
      if (class_filter_passes(req, w)) items.push_back(to_json(w));
    }
    send_json(res, {{"radius", audit.radius},
                    {"perplexity_threshold", audit.perplexity_threshold},
                    {"count", items.size()},
                    {"weakspots", items}});
  }));

  s.Get(R"(/api/weakspots/([^/]+))", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto report = require_report(audit_path);
    for (const auto& w : report.at("weakspots")) {
      if (w.at("pivotal_id").get<std::string>() != id) continue;
      Json body = w;
      const auto& ws = workspace();
      Json neighbors = Json::array();
      for (const auto& n : w.at("neighbor_ids")) {
        if (auto row = ws.reference.find(n.get<std::string>())) neighbors.push_back(to_json(ws.reference.records()[*row]));
      }
      if (auto row = ws.reference.find(id)) body["record"] = to_json(ws.reference.records()[*row]);
      body["neighbors"] = neighbors;
      send_json(res, body);
      return;
    }
    throw Error(ErrorCode::UnknownObjectId, "no weakspot with pivotal id '" + id + "'");
  }));

  s.Get("/api/associations", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::optional<Verdict> filter;
    if (req.has_param("verdict")) filter = parse_verdict(req.get_param_value("verdict"));
    Json items = Json::array();
    const auto snapshot = review_.snapshot();
    for (const auto& item : snapshot.items()) {
      if (!filter || item.verdict == *filter) items.push_back(to_json(item));
    }
    send_json(res, {{"count", items.size()}, {"items", items}});
  }));

  s.Post(R"(/api/associations/([^/]+)/([^/]+)/verdict)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const AssociationKey key{req.matches[1], req.matches[2]};
           Json body;
           try {
             body = Json::parse(req.body);
           } catch (const Json::exception& e) {
             throw Error(ErrorCode::ParseError, e.what());
           }
           if (!body.contains("verdict") || !body["verdict"].is_string()) {
             throw Error(ErrorCode::InvalidArgument, "body needs a string 'verdict'");
           }
           const auto verdict = parse_verdict(body["verdict"].get<std::string>());
           review_.set_verdict(key, verdict, body.value("reviewer", std::string("anonymous")));
           const auto snapshot = review_.snapshot();
           send_json(res, to_json(*snapshot.find(key)));
         }));

  s.Get("/api/prompts", guarded([this](const httplib::Request&, httplib::Response& res) {
    const auto build = current_descriptions(config_, workspace(), review_.snapshot());
    Json prompts = Json::array();
    for (const auto& d : build.set.entries()) prompts.push_back(to_json(d));
    send_json(res, {{"count", prompts.size()},
                    {"skipped_missing_caption", build.skipped_missing_caption},
                    {"prompts", prompts}});
  }));

  s.Post("/api/enhance", guarded([this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(enhance_mutex_);
    send_json(res, run_enhance(config_, review_.snapshot()).to_json());
  }));

  s.Get("/api/metrics/before-after", guarded([=](const httplib::Request&, httplib::Response& res) {
    if (const auto enhance = read_report(enhance_path)) {
      send_json(res, {{"before", enhance->at("before")},
                      {"after", enhance->at("after")},
                      {"overall_accuracy_delta", enhance->at("overall_accuracy_delta")},
                      {"disparities", enhance->at("disparities")},
                      {"grid_before", enhance->at("grid_before")},
                      {"grid_after", enhance->at("grid_after")}});
      return;
    }
    const auto audit = require_report(audit_path);
    send_json(res, {{"before", audit.at("baseline")},
                    {"after", nullptr},
                    {"overall_accuracy_delta", nullptr},
                    {"disparities", audit.at("disparities")},
                    {"grid_before", audit.at("grid")},
                    {"grid_after", nullptr}});
  }));
}

int Service::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::BindFailure, host + ":" + std::to_string(port));
  return bound;
}

int Service::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  bind(host, port);
  server_->listen_after_bind();
}

void Service::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace weakspot
