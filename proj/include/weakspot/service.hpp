#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "weakspot/association_review.hpp"
#include "weakspot/pipeline.hpp"

namespace httplib {
class Server;
}

namespace weakspot {

/// JSON API over a pipeline's output directory. Reads are concurrent;
/// verdict writes and enhancement runs are serialised.
class Service {
 public:
  explicit Service(PipelineConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Cache;

  void install_routes();
  int bind(const std::string& host, int port);
  const Workspace& workspace();
  LabelMap reference_predictions();

  PipelineConfig config_;
  ReviewStore review_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::mutex cache_mutex_;
  std::optional<Workspace> workspace_;
  std::optional<LabelMap> predictions_;
  std::mutex enhance_mutex_;
};

}  // namespace weakspot
