#include "weakspot/procurement.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdio>
#include <thread>
#include <unordered_set>

#include "weakspot/io.hpp"
#include "weakspot/random.hpp"

namespace weakspot {

namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string prefix;
};

Endpoint split_url(const std::string& base_url) {
  const auto scheme = base_url.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto path_start = base_url.find('/', host_start);
  Endpoint endpoint;
  endpoint.scheme_host_port = base_url.substr(0, path_start);
  if (path_start != std::string::npos) endpoint.prefix = base_url.substr(path_start);
  while (!endpoint.prefix.empty() && endpoint.prefix.back() == '/') endpoint.prefix.pop_back();
  return endpoint;
}

// POSTs `body`, retrying transport failures and 5xx/429 responses with
// exponential backoff. Returns the response body of the first 2xx reply.
std::string post_with_retry(const std::string& base_url, const std::string& path,
                            const std::string& body, const RetryPolicy& policy, ErrorCode failure) {
  using Clock = std::chrono::steady_clock;
  const auto endpoint = split_url(base_url);
  const auto deadline = Clock::now() + policy.total_timeout;
  auto backoff = policy.initial_backoff;
  std::string last_error = "no attempt made";

  for (int attempt = 1; attempt <= policy.attempts; ++attempt) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) {
      last_error = "total timeout exceeded";
      break;
    }
    httplib::Client client(endpoint.scheme_host_port);
    client.set_connection_timeout(remaining);
    client.set_read_timeout(remaining);
    client.set_write_timeout(remaining);

    auto response = client.Post(endpoint.prefix + path, body, "application/json");
    if (response && response->status >= 200 && response->status < 300) {
      return response->body;
    }
    bool retryable = true;
    if (!response) {
      last_error = httplib::to_string(response.error());
    } else {
      last_error = "HTTP " + std::to_string(response->status);
      retryable = response->status >= 500 || response->status == 429;
    }
    if (!retryable || attempt == policy.attempts) break;
    if (Clock::now() + backoff >= deadline) {
      last_error += " (no time left for retry)";
      break;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
  throw Error(failure, base_url + path + ": " + last_error);
}

std::string batch_record_id(const std::string& request_id, std::size_t i) {
  char suffix[16];
  std::snprintf(suffix, sizeof(suffix), "-%03zu", i);
  return request_id + suffix;
}

Record procured_record(const ProcurementRequest& request, std::size_t i, Provenance provenance) {
  Record record;
  record.id = batch_record_id(request.request_id, i);
  record.split = Split::procured;
  record.true_class = request.description.target_class;
  record.caption = request.description.text;
  record.provenance = provenance;
  return record;
}

ProcuredBatch procure_from_provider(const ProcurementRequest& request, Channel expected,
                                    ImageProvider& provider, Embedder& embedder, std::size_t dim) {
  if (request.channel != expected) {
    throw Error(ErrorCode::InvalidArgument, "request " + request.request_id + " is for channel " +
                                                std::string(to_string(request.channel)));
  }
  const Provenance provenance = expected == Channel::web ? Provenance::web : Provenance::txt2img;
  auto refs = provider.generate(request.description.text, request.count);
  if (refs.size() > request.count) refs.resize(request.count);

  ProcuredBatch batch{request.request_id, {}, EmbeddingStore(dim)};
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto embedding = embedder.embed(refs[i]);
    if (embedding.size() != dim) {
      throw Error(ErrorCode::DimMismatch, "embedding for '" + refs[i] + "' has dim " +
                                              std::to_string(embedding.size()) + ", expected " +
                                              std::to_string(dim));
    }
    batch.embeddings.append(embedding);
    Record record = procured_record(request, i, provenance);
    record.attributes["image_ref"] = refs[i];
    batch.records.push_back(std::move(record));
  }
  return batch;
}

std::vector<std::string> parse_items(const Json& body, std::size_t count) {
  std::vector<std::string> refs;
  for (const auto& item : body.at("items")) {
    if (refs.size() == count) break;
    refs.push_back(item.at("image_ref").get<std::string>());
  }
  return refs;
}

std::optional<ProcuredBatch> load_cached(const std::filesystem::path& dir, const std::string& id) {
  const auto meta_path = dir / (id + ".json");
  const auto store_path = dir / (id + ".wsem");
  if (!std::filesystem::exists(meta_path) || !std::filesystem::exists(store_path)) {
    return std::nullopt;
  }
  const auto meta = Json::parse(io::read_file(meta_path));
  ProcuredBatch batch{id, {}, load_embedding_store(store_path)};
  for (const auto& r : meta.at("records")) batch.records.push_back(record_from_json(r));
  if (batch.records.size() != batch.embeddings.count()) return std::nullopt;
  return batch;
}

void store_cached(const std::filesystem::path& dir, const ProcuredBatch& batch) {
  Json records = Json::array();
  for (const auto& r : batch.records) records.push_back(to_json(r));
  // Store first: the JSON file marks a complete entry.
  save_embedding_store(batch.embeddings, dir / (batch.request_id + ".wsem"));
  io::write_file_atomic(dir / (batch.request_id + ".json"),
                        Json{{"request_id", batch.request_id}, {"records", records}}.dump(2) + "\n");
}

}  // namespace

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::web: return "web";
    case Channel::txt2img: return "txt2img";
    case Channel::synthetic: return "synthetic";
  }
  return "synthetic";
}

Channel parse_channel(std::string_view text) {
  if (text == "web") return Channel::web;
  if (text == "txt2img") return Channel::txt2img;
  if (text == "synthetic") return Channel::synthetic;
  throw Error(ErrorCode::InvalidConfig, "unknown channel '" + std::string(text) + "'");
}

std::string request_id_for(std::string_view text, Channel channel, std::size_t count) {
  std::string key(text);
  key += '\x1f';
  key += to_string(channel);
  key += '\x1f';
  key += std::to_string(count);
  return io::content_hash(key);
}

std::vector<ProcurementRequest> plan(const DescriptionSet& descriptions,
                                     std::span<const Channel> channels, std::size_t per_count) {
  if (per_count == 0) throw Error(ErrorCode::InvalidArgument, "per_count must be positive");
  std::vector<ProcurementRequest> requests;
  std::unordered_set<std::string> seen;
  for (const auto& description : descriptions.entries()) {
    for (Channel channel : channels) {
      auto id = request_id_for(description.text, channel, per_count);
      if (!seen.insert(id).second) continue;
      requests.push_back({std::move(id), description, channel, per_count, description.pivotal_id});
    }
  }
  return requests;
}

Json to_json(const ProcurementRequest& request) {
  return {{"request_id", request.request_id},
          {"description", to_json(request.description)},
          {"channel", to_string(request.channel)},
          {"count", request.count},
          {"pivotal_id", request.pivotal_id ? Json(*request.pivotal_id) : Json(nullptr)}};
}

std::string encode_requests(std::span<const ProcurementRequest> requests) {
  std::string out;
  for (const auto& r : requests) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

DatasetBundle ProcuredBatch::to_bundle() const { return bind_records(embeddings, records); }

void SyntheticParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "synthetic alpha outside [0,1]");
  }
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidConfig, "synthetic sigma must be >= 0");
}

HttpImageProvider::HttpImageProvider(std::string base_url, RetryPolicy policy)
    : base_url_(std::move(base_url)), policy_(policy) {}

std::vector<std::string> HttpImageProvider::generate(const std::string& prompt, std::size_t count) {
  const Json request = {{"prompt", prompt}, {"count", count}};
  const auto body =
      post_with_retry(base_url_, "/generate", request.dump(), policy_, ErrorCode::ProviderUnavailable);
  try {
    return parse_items(Json::parse(body), count);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, "malformed provider payload: " + std::string(e.what()));
  }
}

HttpEmbedder::HttpEmbedder(std::string base_url, RetryPolicy policy)
    : base_url_(std::move(base_url)), policy_(policy) {}

std::vector<float> HttpEmbedder::embed(const std::string& image_ref) {
  const Json request = {{"image_ref", image_ref}};
  const auto body =
      post_with_retry(base_url_, "/embed", request.dump(), policy_, ErrorCode::EmbedderUnavailable);
  try {
    return Json::parse(body).at("embedding").get<std::vector<float>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::EmbedderUnavailable, "malformed embedder payload: " + std::string(e.what()));
  }
}

FixtureImageProvider::FixtureImageProvider(const std::filesystem::path& dir) {
  const auto path = dir / "responses.json";
  responses_ = std::filesystem::exists(path) ? Json::parse(io::read_file(path)) : Json::object();
}

std::vector<std::string> FixtureImageProvider::generate(const std::string& prompt,
                                                        std::size_t count) {
  auto it = responses_.find(prompt);
  if (it == responses_.end()) return {};
  try {
    return parse_items(*it, count);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, "malformed fixture payload: " + std::string(e.what()));
  }
}

FixtureEmbedder::FixtureEmbedder(const std::filesystem::path& dir) {
  const auto path = dir / "embeddings.json";
  embeddings_ = std::filesystem::exists(path) ? Json::parse(io::read_file(path)) : Json::object();
}

std::vector<float> FixtureEmbedder::embed(const std::string& image_ref) {
  auto it = embeddings_.find(image_ref);
  if (it == embeddings_.end()) {
    throw Error(ErrorCode::EmbedderUnavailable, "no fixture embedding for '" + image_ref + "'");
  }
  return it->get<std::vector<float>>();
}

ProcuredBatch procure_web(const ProcurementRequest& request, ImageProvider& provider,
                          Embedder& embedder, std::size_t dim) {
  return procure_from_provider(request, Channel::web, provider, embedder, dim);
}

ProcuredBatch procure_txt2img(const ProcurementRequest& request, ImageProvider& provider,
                              Embedder& embedder, std::size_t dim) {
  return procure_from_provider(request, Channel::txt2img, provider, embedder, dim);
}

ProcuredBatch procure_synthetic(const ProcurementRequest& request,
                                std::span<const float> pivotal_vector,
                                std::span<const float> class_centroid,
                                const SyntheticParams& params) {
  if (request.channel != Channel::synthetic) {
    throw Error(ErrorCode::InvalidArgument, "request " + request.request_id + " is for channel " +
                                                std::string(to_string(request.channel)));
  }
  params.validate();
  const std::size_t dim = pivotal_vector.size();
  if (dim == 0 || class_centroid.size() != dim) {
    throw Error(ErrorCode::DimMismatch, "pivotal dim " + std::to_string(dim) + " vs centroid dim " +
                                            std::to_string(class_centroid.size()));
  }

  const std::uint64_t request_key =
      random::combine(params.seed, random::hash_text(request.request_id));
  ProcuredBatch batch{request.request_id, {}, EmbeddingStore(dim)};
  std::vector<float> sample(dim);
  for (std::size_t i = 0; i < request.count; ++i) {
    const random::CounterStream stream(random::combine(request_key, i));
    for (std::size_t d = 0; d < dim; ++d) {
      const double x = pivotal_vector[d];
      const double mu = class_centroid[d];
      sample[d] = static_cast<float>(x + params.alpha * (mu - x) + params.sigma * stream.normal(d));
    }
    batch.embeddings.append(sample);
    batch.records.push_back(procured_record(request, i, Provenance::synthetic));
  }
  return batch;
}

FulfillResult fulfill(std::span<const ProcurementRequest> requests, const FulfillContext& context) {
  FulfillResult result;
  for (const auto& request : requests) {
    try {
      if (request.channel == Channel::synthetic) {
        if (!context.anchors) {
          throw Error(ErrorCode::InvalidConfig, "synthetic channel has no anchor resolver");
        }
        const auto anchor = context.anchors(request);
        result.batches.push_back(
            procure_synthetic(request, anchor.pivotal, anchor.centroid, context.synthetic));
        continue;
      }
      if (context.cache_dir) {
        if (auto cached = load_cached(*context.cache_dir, request.request_id)) {
          ++result.cache_hits;
          result.batches.push_back(std::move(*cached));
          continue;
        }
      }
      ImageProvider* provider = request.channel == Channel::web ? context.web : context.txt2img;
      if (provider == nullptr) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "no provider configured for channel " + std::string(to_string(request.channel)));
      }
      if (context.embedder == nullptr) {
        throw Error(ErrorCode::EmbedderUnavailable, "no embedder configured");
      }
      auto batch = request.channel == Channel::web
                       ? procure_web(request, *provider, *context.embedder, context.dim)
                       : procure_txt2img(request, *provider, *context.embedder, context.dim);
      if (context.cache_dir) store_cached(*context.cache_dir, batch);
      result.batches.push_back(std::move(batch));
    } catch (const Error& e) {
      result.failures.push_back({request.request_id, e.code(), e.what()});
    } catch (const std::exception& e) {
      result.failures.push_back({request.request_id, ErrorCode::IoFailure, e.what()});
    }
  }
  return result;
}

}  // namespace weakspot
