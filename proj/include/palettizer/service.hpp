#pragma once

#include "palettizer/imputer.hpp"
#include "palettizer/preferences.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace palettizer {

enum class SeedPolicy { fixed, per_request };

struct ServiceConfig {
    std::string model_path;
    std::string lexicon_path = std::string(PALETTIZER_DATA_DIR) + "/lexicon.json";
    std::string store_path = "palettizer-store.json";
    std::string host = "127.0.0.1";
    int port = 8080;
    int default_n = 5;
    SeedPolicy seed_policy = SeedPolicy::per_request;
    std::uint64_t seed = 0;  // used when the policy is fixed
    std::size_t max_nodes = kDefaultMaxNodes;

    static ServiceConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Reads `path`, or the file named by PALETTIZER_CONFIG when that variable is
/// set. Missing keys keep their defaults. Throws InvalidInput on bad values.
ServiceConfig load_service_config(const std::optional<std::string>& path);

/// File-backed JSON store for sessions and analysed documents. Every
/// mutation rewrites the file through a temporary and an atomic rename.
class SessionStore {
public:
    explicit SessionStore(std::string path);

    std::string add_doc(const nlohmann::json& doc);
    std::optional<nlohmann::json> doc(const std::string& id) const;

    nlohmann::json create_session(const std::optional<std::string>& doc_id);
    std::optional<nlohmann::json> session(const std::string& id) const;

    /// Applies `fn` to the session under the store lock and persists the
    /// result. Returns false when the session does not exist.
    template <typename Fn>
    bool update_session(const std::string& id, Fn&& fn) {
        std::lock_guard lock(mutex_);
        auto it = data_["sessions"].find(id);
        if (it == data_["sessions"].end()) return false;
        fn(*it, data_["counters"]);
        persist();
        return true;
    }

private:
    void persist();
    std::string next_id(const std::string& counter, const std::string& prefix);

    std::string path_;
    mutable std::mutex mutex_;
    nlohmann::json data_;
};

struct ApiRequest {
    std::string method;
    std::string path;
    std::string body;
    std::string content_type;
    /// Multipart parts by field name (raw bytes).
    std::map<std::string, std::string> parts;
};

struct ApiResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// Routes /api requests. The model and lexicon are read-only after
/// construction, so concurrent calls only contend on the store.
class Api {
public:
    Api(ServiceConfig config, std::shared_ptr<const Imputer> model, Lexicon lexicon);

    ApiResponse handle(const ApiRequest& req);

private:
    ApiResponse analyze(const ApiRequest& req);
    ApiResponse recommend_route(const nlohmann::json& body);
    ApiResponse create_session(const nlohmann::json& body);
    ApiResponse get_session(const std::string& id);
    ApiResponse choose(const std::string& id, const nlohmann::json& body);
    ApiResponse add_bookmark(const std::string& id, const nlohmann::json& body);
    ApiResponse list_bookmarks(const std::string& id);
    ApiResponse delete_bookmark(const std::string& id, const std::string& bookmark);
    std::uint64_t request_seed(const nlohmann::json& body);

    ServiceConfig config_;
    std::shared_ptr<const Imputer> model_;
    Lexicon lexicon_;
    SessionStore store_;
};

/// Layered view of a document for the tree widget: one entry per node with
/// its depth, kind and box, in pre-order.
nlohmann::json layer_layout(const InfographicDoc& doc);

/// HTTP front end for an Api. Every method and path is forwarded to
/// Api::handle; unexpected exceptions become structured 500 responses.
class HttpServer {
public:
    explicit HttpServer(Api& api);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds to host:port (port 0 picks a free one). Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop() is called.
    bool listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Serves the API until the process is stopped. Returns non-zero on bind failure.
int run_server(Api& api, const ServiceConfig& config);

std::string base64_decode(std::string_view in);

}  // namespace palettizer
