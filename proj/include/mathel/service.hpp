#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mathel/corpus.hpp"
#include "mathel/json.hpp"
#include "mathel/recommender.hpp"
#include "mathel/session.hpp"

namespace httplib {
class Server;
}

namespace mathel {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::map<SourceKind, std::filesystem::path> identifier_catalogs;
  std::optional<std::filesystem::path> formula_catalog;
  std::optional<std::filesystem::path> fc_memory;
  std::optional<std::filesystem::path> user_inputs;
  std::optional<std::filesystem::path> session_dir;  // sessions persisted here when set
  std::string wiki_base_url;                        // http(s) URL, directory or file
  std::string wiki_url_template = FetchOptions{}.url_template;
  int fetch_retries = FetchOptions{}.max_retries;
  RecommenderConfig recommender;
  TokenizerOptions tokenizer = TokenizerOptions::defaults();
};

// Reads the JSON config file (relative paths resolve against its directory)
// and applies MATHEL_PORT, MATHEL_SESSION_DIR and MATHEL_WIKI_BASE_URL.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& path);
ServiceConfig parse_service_config(std::string_view json_text, const std::filesystem::path& base_dir);
void apply_service_env(ServiceConfig& config);

struct ApiRequest {
  std::string method;
  std::string path;  // decoded, e.g. "/v1/sessions/abc"
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Transport-independent request handling. All state-changing routes honour
// an Idempotency-Key header by replaying the first response.
class Service {
 public:
  using Logger = std::function<void(const Json&)>;

  explicit Service(ServiceConfig config);
  Service(ServiceConfig config, std::vector<IdentifierCatalog> identifier_catalogs, FormulaCatalog formula_catalog,
          FcMemory memory, UserInputStore user_inputs);

  ApiResponse handle(const ApiRequest& request);

  void set_logger(Logger logger) { logger_ = std::move(logger); }
  void set_fetch_options(FetchOptions options) { fetch_options_ = std::move(options); }
  const ServiceConfig& config() const noexcept { return config_; }
  SharedStores& stores() noexcept { return stores_; }
  std::size_t session_count() const;

 private:
  struct Entry {
    std::mutex mutex;
    Session session;
    explicit Entry(Session s) : session(std::move(s)) {}
  };

  ApiResponse route(const ApiRequest& request);
  ApiResponse create_session(const ApiRequest& request);
  ApiResponse get_session(const std::string& id);
  ApiResponse recommendations(const std::string& id, const ApiRequest& request);
  ApiResponse annotate(const std::string& id, const ApiRequest& request);
  ApiResponse unannotate(const std::string& id, const std::string& target);
  ApiResponse reject(const std::string& id, const ApiRequest& request);
  ApiResponse source_report_route();
  ApiResponse timing_report_route();
  ApiResponse export_wikitext(const ApiRequest& request);
  ApiResponse export_table(const std::string& id, const ApiRequest& request);

  std::shared_ptr<Entry> find(const std::string& id) const;
  Json session_view(const Session& session) const;
  RecommendationSet recommend(const Session& session, const TargetRef& target) const;
  void persist(const Session& session) const;
  std::string new_session_id();

  ServiceConfig config_;
  std::vector<IdentifierCatalog> identifier_catalogs_;
  FormulaCatalog formula_catalog_;
  SharedStores stores_;
  FetchOptions fetch_options_;
  Logger logger_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;

  std::mutex id_mutex_;
  std::uint64_t id_state_;

  std::mutex idempotency_mutex_;
  std::map<std::string, std::shared_future<ApiResponse>> idempotent_;
  std::deque<std::string> idempotent_order_;
};

// Routes every /v1 request of `server` to `service`.
void bind_routes(httplib::Server& server, Service& service);
// Blocks serving HTTP until the process is stopped.
void run_server(Service& service, const std::string& host, int port);

}  // namespace mathel
