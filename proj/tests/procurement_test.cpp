#include <httplib.h>

#include <atomic>
#include <thread>

#include "support.hpp"
#include "weakspot/io.hpp"
#include "weakspot/procurement.hpp"

using namespace weakspot;
using namespace weakspot::testing;

namespace {

// In-process stand-in for an image provider plus embedder.
class MockProvider {
 public:
  explicit MockProvider(std::size_t dim) : dim_(dim) {
    server_.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
      ++generate_calls;
      if (failures_left > 0) {
        --failures_left;
        res.status = 503;
        return;
      }
      if (malformed) {
        res.set_content(R"({"pictures": 3})", "application/json");
        return;
      }
      const auto body = Json::parse(req.body);
      Json items = Json::array();
      for (std::size_t i = 0; i < items_per_call; ++i) {
        items.push_back({{"image_ref", body.at("prompt").get<std::string>() + "#" + std::to_string(i)}});
      }
      res.set_content(Json{{"items", items}}.dump(), "application/json");
    });
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++embed_calls;
      const auto ref = Json::parse(req.body).at("image_ref").get<std::string>();
      std::vector<float> v(dim_, static_cast<float>(random::hash_text(ref) % 1000) / 1000.0f);
      res.set_content(Json{{"embedding", v}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockProvider() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::size_t items_per_call = 5;
  int failures_left = 0;
  bool malformed = false;
  std::atomic<int> generate_calls{0};
  std::atomic<int> embed_calls{0};

 private:
  std::size_t dim_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RetryPolicy fast_policy() {
  RetryPolicy p;
  p.initial_backoff = std::chrono::milliseconds(5);
  p.total_timeout = std::chrono::milliseconds(5000);
  return p;
}

ProcurementRequest request_for(const std::string& text, Channel channel, std::size_t count,
                               std::string target = "nurse") {
  TextualDescription d{text, DescriptionPurpose::weakspot, std::move(target), "p1", {}};
  return {request_id_for(text, channel, count), d, channel, count, d.pivotal_id};
}

}  // namespace

TEST(RequestId, IsAStableContentHash) {
  const auto a = request_id_for("a nurse", Channel::web, 20);
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a, request_id_for("a nurse", Channel::web, 20));
  EXPECT_EQ(a, io::content_hash(std::string("a nurse\x1fweb\x1f") + "20"));
  EXPECT_NE(a, request_id_for("a nurse", Channel::txt2img, 20));
  EXPECT_NE(a, request_id_for("a nurse", Channel::web, 21));
}

TEST(Plan, OneRequestPerDescriptionAndChannel) {
  DescriptionSet set;
  set.insert({"a nurse", DescriptionPurpose::weakspot, "nurse", "p1", {}});
  set.insert({"a doctor", DescriptionPurpose::weakspot, "doctor", "p2", {}});
  set.insert({"a nurse", DescriptionPurpose::mitigation, "doctor", std::nullopt, {}});  // same text
  const std::vector<Channel> channels = {Channel::web, Channel::synthetic};
  const auto requests = plan(set, channels, 20);
  ASSERT_EQ(requests.size(), 4u);
  EXPECT_EQ(requests[0].channel, Channel::web);
  EXPECT_EQ(requests[1].channel, Channel::synthetic);
  EXPECT_EQ(requests[0].pivotal_id, std::optional<std::string>("p1"));
  EXPECT_WEAKSPOT_ERROR(plan(set, channels, 0), ErrorCode::InvalidArgument);
  EXPECT_TRUE(plan(DescriptionSet{}, channels, 5).empty());
}

TEST(HttpProvider, FiveItemsBecomeFiveRecords) {
  MockProvider mock(4);
  HttpImageProvider provider(mock.url(), fast_policy());
  HttpEmbedder embedder(mock.url(), fast_policy());
  const auto batch = procure_web(request_for("a nurse", Channel::web, 5), provider, embedder, 4);
  ASSERT_EQ(batch.records.size(), 5u);
  EXPECT_EQ(batch.embeddings.count(), 5u);
  EXPECT_EQ(batch.records[0].provenance, Provenance::web);
  EXPECT_EQ(batch.records[0].split, Split::procured);
  EXPECT_EQ(batch.records[0].true_class, "nurse");
  EXPECT_EQ(batch.records[0].attributes.at("image_ref"), "a nurse#0");
  EXPECT_EQ(batch.records[4].id, batch.request_id + "-004");
  EXPECT_EQ(mock.embed_calls.load(), 5);
  EXPECT_EQ(batch.to_bundle().count(), 5u);
}

TEST(HttpProvider, ResultsAreTruncatedToTheRequestedCount) {
  MockProvider mock(2);
  mock.items_per_call = 9;
  HttpImageProvider provider(mock.url(), fast_policy());
  HttpEmbedder embedder(mock.url(), fast_policy());
  EXPECT_EQ(procure_txt2img(request_for("x", Channel::txt2img, 3), provider, embedder, 2).records.size(), 3u);
}

TEST(HttpProvider, ZeroItemsIsAnEmptyBatch) {
  MockProvider mock(2);
  mock.items_per_call = 0;
  HttpImageProvider provider(mock.url(), fast_policy());
  HttpEmbedder embedder(mock.url(), fast_policy());
  const auto batch = procure_web(request_for("x", Channel::web, 5), provider, embedder, 2);
  EXPECT_TRUE(batch.records.empty());
  EXPECT_EQ(mock.embed_calls.load(), 0);
}

TEST(HttpProvider, RetriesServerErrorsThenGivesUp) {
  MockProvider mock(2);
  mock.failures_left = 3;
  HttpImageProvider provider(mock.url(), fast_policy());
  EXPECT_WEAKSPOT_ERROR(provider.generate("x", 2), ErrorCode::ProviderUnavailable);
  EXPECT_EQ(mock.generate_calls.load(), 3);
}

TEST(HttpProvider, RecoversWithinTheRetryBudget) {
  MockProvider mock(2);
  mock.failures_left = 2;
  HttpImageProvider provider(mock.url(), fast_policy());
  EXPECT_EQ(provider.generate("x", 2).size(), 2u);
  EXPECT_EQ(mock.generate_calls.load(), 3);
}

TEST(HttpProvider, MalformedPayloadIsNotRetried) {
  MockProvider mock(2);
  mock.malformed = true;
  HttpImageProvider provider(mock.url(), fast_policy());
  EXPECT_WEAKSPOT_ERROR(provider.generate("x", 2), ErrorCode::ProviderUnavailable);
  EXPECT_EQ(mock.generate_calls.load(), 1);
}

TEST(HttpProvider, UnreachableHostFails) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RetryPolicy policy = fast_policy();
  policy.attempts = 2;
  HttpImageProvider provider("http://127.0.0.1:" + std::to_string(port), policy);
  EXPECT_WEAKSPOT_ERROR(provider.generate("x", 1), ErrorCode::ProviderUnavailable);
}

TEST(HttpEmbedder, DimensionMismatchIsReported) {
  MockProvider mock(3);
  HttpImageProvider provider(mock.url(), fast_policy());
  HttpEmbedder embedder(mock.url(), fast_policy());
  EXPECT_WEAKSPOT_ERROR(procure_web(request_for("x", Channel::web, 2), provider, embedder, 4), ErrorCode::DimMismatch);
}

TEST(Fulfill, CachesProviderBatchesByRequestId) {
  TempDir dir;
  MockProvider mock(2);
  HttpImageProvider provider(mock.url(), fast_policy());
  HttpEmbedder embedder(mock.url(), fast_policy());
  FulfillContext context;
  context.web = &provider;
  context.embedder = &embedder;
  context.dim = 2;
  context.cache_dir = dir.path();
  const std::vector<ProcurementRequest> requests = {request_for("a nurse", Channel::web, 3)};

  const auto first = fulfill(requests, context);
  ASSERT_EQ(first.batches.size(), 1u);
  EXPECT_EQ(first.cache_hits, 0u);
  const int calls = mock.generate_calls.load();

  const auto second = fulfill(requests, context);
  EXPECT_EQ(second.cache_hits, 1u);
  EXPECT_EQ(mock.generate_calls.load(), calls);
  ASSERT_EQ(second.batches.size(), 1u);
  EXPECT_EQ(second.batches[0].records, first.batches[0].records);
  EXPECT_EQ(second.batches[0].embeddings, first.batches[0].embeddings);
}

TEST(Fulfill, CollectsPerRequestFailures) {
  MockProvider mock(2);
  mock.failures_left = 100;
  HttpImageProvider provider(mock.url(), fast_policy());
  HttpEmbedder embedder(mock.url(), fast_policy());
  FulfillContext context;
  context.web = &provider;
  context.embedder = &embedder;
  context.dim = 2;
  context.anchors = [](const ProcurementRequest&) {
    return SyntheticAnchor{{0.0f, 0.0f}, {1.0f, 1.0f}};
  };
  const std::vector<ProcurementRequest> requests = {request_for("a", Channel::web, 2),
                                                    request_for("b", Channel::txt2img, 2),
                                                    request_for("c", Channel::synthetic, 2)};
  const auto result = fulfill(requests, context);
  ASSERT_EQ(result.failures.size(), 2u);
  EXPECT_EQ(result.failures[0].code, ErrorCode::ProviderUnavailable);
  EXPECT_EQ(result.failures[1].request_id, requests[1].request_id);
  ASSERT_EQ(result.batches.size(), 1u);
  EXPECT_EQ(result.batches[0].request_id, requests[2].request_id);
}

TEST(FixtureProvider, PlaysBackRecordedResponses) {
  TempDir dir;
  io::write_file_atomic(dir / "responses.json",
                        R"({"a nurse": {"items": [{"image_ref": "n1"}, {"image_ref": "n2"}]}})");
  io::write_file_atomic(dir / "embeddings.json", R"({"n1": [1, 2], "n2": [3, 4]})");
  FixtureImageProvider provider(dir.path());
  FixtureEmbedder embedder(dir.path());
  const auto batch = procure_web(request_for("a nurse", Channel::web, 5), provider, embedder, 2);
  ASSERT_EQ(batch.records.size(), 2u);
  EXPECT_EQ(batch.embeddings.row(1)[0], 3.0f);
  EXPECT_TRUE(provider.generate("unknown prompt", 3).empty());
  EXPECT_WEAKSPOT_ERROR(embedder.embed("zz"), ErrorCode::EmbedderUnavailable);
}

TEST(Synthetic, ExactWhenNoiseIsZero) {
  const std::vector<float> x = {0.0f, 2.0f}, mu = {4.0f, 2.0f};
  const auto batch = procure_synthetic(request_for("s", Channel::synthetic, 3), x, mu, {0.25, 0.0, 1});
  ASSERT_EQ(batch.embeddings.count(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_FLOAT_EQ(batch.embeddings.row(i)[0], 1.0f);
    EXPECT_FLOAT_EQ(batch.embeddings.row(i)[1], 2.0f);
  }
  EXPECT_EQ(batch.records[0].provenance, Provenance::synthetic);
}

TEST(Synthetic, DeterministicAndKeyedByRequest) {
  const std::vector<float> x = {0.0f, 0.0f}, mu = {1.0f, 1.0f};
  const SyntheticParams params{0.5, 1.0, 42};
  const auto a = procure_synthetic(request_for("s", Channel::synthetic, 4), x, mu, params);
  const auto b = procure_synthetic(request_for("s", Channel::synthetic, 4), x, mu, params);
  EXPECT_EQ(a.embeddings, b.embeddings);
  const auto other = procure_synthetic(request_for("t", Channel::synthetic, 4), x, mu, params);
  EXPECT_NE(other.embeddings, a.embeddings);
  const auto reseeded = procure_synthetic(request_for("s", Channel::synthetic, 4), x, mu, {0.5, 1.0, 43});
  EXPECT_NE(reseeded.embeddings, a.embeddings);
}

// Monte-Carlo check: sample mean and spread match x + alpha (mu - x) and sigma.
TEST(SyntheticProperty, MomentsMatchTheModel) {
  const std::vector<float> x = {1.0f, -2.0f, 0.5f}, mu = {3.0f, 2.0f, 0.5f};
  const SyntheticParams params{0.3, 0.7, 9};
  const std::size_t n = 20000;
  const auto batch = procure_synthetic(request_for("mc", Channel::synthetic, n), x, mu, params);
  for (std::size_t d = 0; d < x.size(); ++d) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = batch.embeddings.row(i)[d];
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    const double expected = x[d] + params.alpha * (mu[d] - x[d]);
    EXPECT_NEAR(mean, expected, 4.0 * params.sigma / std::sqrt(double(n))) << "dim " << d;
    EXPECT_NEAR(sd, params.sigma, 0.02) << "dim " << d;
  }
}

TEST(Synthetic, ValidatesInputs) {
  const std::vector<float> x = {0.0f}, mu2 = {1.0f, 1.0f};
  EXPECT_WEAKSPOT_ERROR(procure_synthetic(request_for("s", Channel::synthetic, 1), x, mu2, {}), ErrorCode::DimMismatch);
  EXPECT_WEAKSPOT_ERROR(procure_synthetic(request_for("s", Channel::synthetic, 1), x, x, {1.5, 0, 0}),
                        ErrorCode::InvalidConfig);
  EXPECT_WEAKSPOT_ERROR(procure_synthetic(request_for("s", Channel::web, 1), x, x, {}), ErrorCode::InvalidArgument);
}
