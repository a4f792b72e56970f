#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weakspot/core_data.hpp"
#include "weakspot/error.hpp"
#include "weakspot/prompt_forge.hpp"

namespace weakspot {

enum class Channel { web, txt2img, synthetic };

std::string_view to_string(Channel channel);
Channel parse_channel(std::string_view text);

struct ProcurementRequest {
  std::string request_id;
  TextualDescription description;
  Channel channel = Channel::synthetic;
  std::size_t count = 0;
  std::optional<std::string> pivotal_id;
};

/// Content hash of (text, channel, count).
std::string request_id_for(std::string_view text, Channel channel, std::size_t count);

/// One request per (description, channel), deduplicated by request id.
std::vector<ProcurementRequest> plan(const DescriptionSet& descriptions,
                                     std::span<const Channel> channels, std::size_t per_count);

Json to_json(const ProcurementRequest& request);
std::string encode_requests(std::span<const ProcurementRequest> requests);

struct ProcuredBatch {
  std::string request_id;
  std::vector<Record> records;
  EmbeddingStore embeddings;

  DatasetBundle to_bundle() const;
};

struct SyntheticParams {
  double alpha = 0.5;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// External sample sources. Implementations report failures with
// ProviderUnavailable / EmbedderUnavailable.
class ImageProvider {
 public:
  virtual ~ImageProvider() = default;
  virtual std::vector<std::string> generate(const std::string& prompt, std::size_t count) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<float> embed(const std::string& image_ref) = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds total_timeout{30000};
};

/// POST {base}/generate {"prompt","count"} -> {"items":[{"image_ref"}...]}.
class HttpImageProvider : public ImageProvider {
 public:
  explicit HttpImageProvider(std::string base_url, RetryPolicy policy = {});
  std::vector<std::string> generate(const std::string& prompt, std::size_t count) override;

 private:
  std::string base_url_;
  RetryPolicy policy_;
};

/// POST {base}/embed {"image_ref"} -> {"embedding":[...]}.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(std::string base_url, RetryPolicy policy = {});
  std::vector<float> embed(const std::string& image_ref) override;

 private:
  std::string base_url_;
  RetryPolicy policy_;
};

/// Offline playback: {dir}/responses.json maps prompt -> provider response
/// body; prompts not listed yield no items.
class FixtureImageProvider : public ImageProvider {
 public:
  explicit FixtureImageProvider(const std::filesystem::path& dir);
  std::vector<std::string> generate(const std::string& prompt, std::size_t count) override;

 private:
  Json responses_;
};

/// Offline playback: {dir}/embeddings.json maps image_ref -> vector.
class FixtureEmbedder : public Embedder {
 public:
  explicit FixtureEmbedder(const std::filesystem::path& dir);
  std::vector<float> embed(const std::string& image_ref) override;

 private:
  Json embeddings_;
};

ProcuredBatch procure_web(const ProcurementRequest& request, ImageProvider& provider,
                          Embedder& embedder, std::size_t dim);
ProcuredBatch procure_txt2img(const ProcurementRequest& request, ImageProvider& provider,
                              Embedder& embedder, std::size_t dim);

/// count samples x + alpha (mu - x) + eps_i, eps_i ~ N(0, sigma^2 I), keyed
/// by (seed, request id, i).
ProcuredBatch procure_synthetic(const ProcurementRequest& request,
                                std::span<const float> pivotal_vector,
                                std::span<const float> class_centroid,
                                const SyntheticParams& params);

struct SyntheticAnchor {
  std::vector<float> pivotal;
  std::vector<float> centroid;
};

struct FulfillContext {
  ImageProvider* web = nullptr;
  ImageProvider* txt2img = nullptr;
  Embedder* embedder = nullptr;
  std::function<SyntheticAnchor(const ProcurementRequest&)> anchors;
  SyntheticParams synthetic;
  std::optional<std::filesystem::path> cache_dir;
  std::size_t dim = 0;
};

struct FulfillFailure {
  std::string request_id;
  ErrorCode code = ErrorCode::ProviderUnavailable;
  std::string message;
};

struct FulfillResult {
  std::vector<ProcuredBatch> batches;  // request order, failures omitted
  std::vector<FulfillFailure> failures;
  std::size_t cache_hits = 0;
};

/// Dispatches by channel. Web and txt2img batches are cached by request id;
/// synthetic batches are regenerated since they depend on parameters the id
/// does not cover. Per-request errors are collected, never thrown.
FulfillResult fulfill(std::span<const ProcurementRequest> requests, const FulfillContext& context);

}  // namespace weakspot
