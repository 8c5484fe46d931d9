#include "palettizer/service.hpp"

#include "palettizer/errors.hpp"
#include "palettizer/extraction.hpp"
#include "palettizer/raster.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace palettizer {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kMaxRecommendations = 50;

// Request text echoed in messages may hold invalid UTF-8; replace it rather than throw.
std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

ApiResponse reply(int status, const json& body) { return {status, dump(body), "application/json"}; }

ApiResponse error(int status, const std::string& code, const std::string& message, json extra = json::object()) {
    json e = {{"code", code}, {"message", message}};
    for (auto& [k, v] : extra.items()) e[k] = v;
    return reply(status, {{"error", e}});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json parse_object(const std::string& body, bool allow_empty) {
    if (body.empty() && allow_empty) return json::object();
    json j = json::parse(body);  // parse_error surfaces as 400
    if (!j.is_object()) throw InvalidInput("request body must be a JSON object");
    return j;
}

std::optional<std::string> optional_string(const json& body, const char* key) {
    if (!body.contains(key) || body[key].is_null()) return std::nullopt;
    if (!body[key].is_string()) throw InvalidInput(std::string("'") + key + "' must be a string");
    return body[key].get<std::string>();
}

}  // namespace

std::string base64_decode(std::string_view in) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+' || c == '-') return 62;
        if (c == '/' || c == '_') return 63;
        return -1;
    };
    std::string out;
    int bits = 0;
    unsigned acc = 0;
    bool padding = false;
    for (char c : in) {
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
        if (c == '=') {
            padding = true;
            continue;
        }
        const int v = value(c);
        if (v < 0 || padding) throw InvalidInput("invalid base64 data");
        acc = (acc << 6) | static_cast<unsigned>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

ServiceConfig ServiceConfig::from_json(const json& j) {
    if (!j.is_object()) throw InvalidInput("service config must be a JSON object");
    ServiceConfig c;
    try {
        c.model_path = j.value("model_path", c.model_path);
        c.lexicon_path = j.value("lexicon_path", c.lexicon_path);
        c.store_path = j.value("store_path", c.store_path);
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        c.default_n = j.value("default_n", c.default_n);
        c.seed = j.value("seed", c.seed);
        c.max_nodes = j.value("max_nodes", c.max_nodes);
        const std::string policy = j.value("seed_policy", std::string("per_request"));
        if (policy == "fixed") {
            c.seed_policy = SeedPolicy::fixed;
        } else if (policy == "per_request") {
            c.seed_policy = SeedPolicy::per_request;
        } else {
            throw InvalidInput("seed_policy must be 'fixed' or 'per_request'");
        }
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed service config: ") + e.what());
    }
    if (c.default_n < 1) throw InvalidInput("default_n must be at least 1");
    if (c.port < 0 || c.port > 65535) throw InvalidInput("port out of range");
    return c;
}

json ServiceConfig::to_json() const {
    return {{"model_path", model_path},
            {"lexicon_path", lexicon_path},
            {"store_path", store_path},
            {"host", host},
            {"port", port},
            {"default_n", default_n},
            {"seed_policy", seed_policy == SeedPolicy::fixed ? "fixed" : "per_request"},
            {"seed", seed},
            {"max_nodes", max_nodes}};
}

ServiceConfig load_service_config(const std::optional<std::string>& path) {
    std::optional<std::string> chosen = path;
    if (const char* env = std::getenv("PALETTIZER_CONFIG"); env && *env) chosen = env;
    if (!chosen) return ServiceConfig{};
    std::ifstream in(*chosen);
    if (!in) throw InvalidInput("cannot open service config " + *chosen);
    try {
        return ServiceConfig::from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("malformed service config: ") + e.what());
    }
}

SessionStore::SessionStore(std::string path) : path_(std::move(path)) {
    data_ = {{"schema", "palettizer-store/1"}, {"sessions", json::object()}, {"docs", json::object()},
             {"counters", json::object()}};
    if (fs::exists(path_)) {
        std::ifstream in(path_);
        try {
            json loaded = json::parse(in);
            for (const char* key : {"sessions", "docs", "counters"}) {
                if (!loaded.contains(key) || !loaded[key].is_object())
                    throw InvalidInput("store " + path_ + " lacks '" + key + "'");
            }
            data_ = std::move(loaded);
        } catch (const json::exception& e) {
            throw InvalidInput("corrupt store " + path_ + ": " + e.what());
        }
    }
}

void SessionStore::persist() {
    const fs::path target(path_);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const std::string tmp = path_ + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("cannot write store " + tmp);
        out << dump(data_);
        out.flush();
        if (!out) throw Error("short write to store " + tmp);
    }
    fs::rename(tmp, target);
}

std::string SessionStore::next_id(const std::string& counter, const std::string& prefix) {
    auto& counters = data_["counters"];
    const long long next = counters.value(counter, 0LL) + 1;
    counters[counter] = next;
    return prefix + std::to_string(next);
}

std::string SessionStore::add_doc(const json& doc) {
    std::lock_guard lock(mutex_);
    const std::string id = next_id("doc", "doc");
    data_["docs"][id] = doc;
    persist();
    return id;
}

std::optional<json> SessionStore::doc(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto& docs = data_["docs"];
    const auto it = docs.find(id);
    if (it == docs.end()) return std::nullopt;
    return *it;
}

json SessionStore::create_session(const std::optional<std::string>& doc_id) {
    std::lock_guard lock(mutex_);
    const std::string id = next_id("session", "s");
    json s = {{"id", id},
              {"doc_id", doc_id ? json(*doc_id) : json(nullptr)},
              {"preferences", to_json(PreferenceSet{})},
              {"history", json::array()},
              {"bookmarks", json::array()},
              {"created", utc_timestamp()}};
    data_["sessions"][id] = s;
    persist();
    return s;
}

std::optional<json> SessionStore::session(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto& sessions = data_["sessions"];
    const auto it = sessions.find(id);
    if (it == sessions.end()) return std::nullopt;
    return *it;
}

json layer_layout(const InfographicDoc& doc) {
    const auto depths = doc.depths();
    json nodes = json::array();
    int max_depth = 0;
    for (const auto& id : doc.preorder()) {
        const ElementNode& n = doc.at(id);
        const int d = depths.at(id);
        max_depth = std::max(max_depth, d);
        nodes.push_back({{"id", id},
                         {"kind", to_string(n.kind)},
                         {"element_type", n.element_type ? json(to_string(*n.element_type)) : json(nullptr)},
                         {"depth", d},
                         {"bbox", {{"x", n.bbox.x}, {"y", n.bbox.y}, {"w", n.bbox.w}, {"h", n.bbox.h}}},
                         {"colorable", n.colorable()},
                         {"color", n.color ? json(to_hex(*n.color)) : json(nullptr)},
                         {"children", n.children}});
    }
    return {{"layer_count", doc.nodes.empty() ? 0 : max_depth + 1}, {"nodes", nodes}};
}

Api::Api(ServiceConfig config, std::shared_ptr<const Imputer> model, Lexicon lexicon)
    : config_(std::move(config)), model_(std::move(model)), lexicon_(std::move(lexicon)), store_(config_.store_path) {}

ApiResponse Api::handle(const ApiRequest& req) {
    try {
        const auto seg = split_path(req.path);
        if (seg.empty() || seg[0] != "api") return error(404, "not_found", "unknown path " + req.path);
        auto method_is = [&](const char* m) { return req.method == m; };
        auto not_allowed = [&] { return error(405, "method_not_allowed", req.method + " not allowed on " + req.path); };

        if (seg.size() == 2 && seg[1] == "health") {
            if (!method_is("GET")) return not_allowed();
            return reply(200, {{"status", "ok"}, {"model_loaded", model_ != nullptr}, {"words", lexicon_.size()}});
        }
        if (seg.size() == 2 && seg[1] == "lexicon") {
            if (!method_is("GET")) return not_allowed();
            return reply(200, lexicon_.to_json());
        }
        if (seg.size() == 2 && seg[1] == "analyze") {
            if (!method_is("POST")) return not_allowed();
            return analyze(req);
        }
        if (seg.size() == 2 && seg[1] == "recommend") {
            if (!method_is("POST")) return not_allowed();
            return recommend_route(parse_object(req.body, false));
        }
        if (seg.size() >= 2 && seg[1] == "sessions") {
            if (seg.size() == 2) {
                if (!method_is("POST")) return not_allowed();
                return create_session(parse_object(req.body, true));
            }
            const std::string& id = seg[2];
            if (seg.size() == 3) {
                if (!method_is("GET")) return not_allowed();
                return get_session(id);
            }
            if (seg.size() == 4 && seg[3] == "choose") {
                if (!method_is("POST")) return not_allowed();
                return choose(id, parse_object(req.body, false));
            }
            if (seg.size() == 4 && seg[3] == "bookmarks") {
                if (method_is("GET")) return list_bookmarks(id);
                if (method_is("POST")) return add_bookmark(id, parse_object(req.body, false));
                return not_allowed();
            }
            if (seg.size() == 5 && seg[3] == "bookmarks") {
                if (!method_is("DELETE")) return not_allowed();
                return delete_bookmark(id, seg[4]);
            }
        }
        return error(404, "not_found", "unknown path " + req.path);
    } catch (const json::parse_error& e) {
        return error(400, "malformed_json", e.what());
    } catch (const json::exception& e) {
        return error(400, "malformed_request", e.what());
    } catch (const CapacityError& e) {
        return error(422, "capacity_exceeded", e.what(), {{"count", e.count()}, {"limit", e.limit()}});
    } catch (const UnknownWord& e) {
        return error(422, "invalid_preferences", e.what(),
                     {{"reason", e.reason()}, {"word", e.word()}, {"nearest", e.nearest()}});
    } catch (const InvalidPreference& e) {
        return error(422, "invalid_preferences", e.what(), {{"reason", e.reason()}});
    } catch (const InvalidInput& e) {
        return error(400, "invalid_input", e.what());
    } catch (const StructuralError& e) {
        return error(422, "invalid_document", e.what());
    } catch (const std::exception& e) {
        return error(500, "internal", e.what());
    }
}

std::uint64_t Api::request_seed(const json& body) {
    if (body.contains("seed") && !body["seed"].is_null()) {
        if (!body["seed"].is_number_unsigned()) throw InvalidInput("'seed' must be a non-negative integer");
        return body["seed"].get<std::uint64_t>();
    }
    if (config_.seed_policy == SeedPolicy::fixed) return config_.seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

ApiResponse Api::analyze(const ApiRequest& req) {
    std::string png;
    json annotations;
    std::optional<std::string> session_id;
    if (!req.parts.empty()) {
        const auto img = req.parts.find("image");
        if (img == req.parts.end()) return error(400, "invalid_input", "multipart request lacks an 'image' part");
        png = img->second;
        if (const auto a = req.parts.find("annotations"); a != req.parts.end() && !a->second.empty())
            annotations = json::parse(a->second);
        if (const auto s = req.parts.find("session_id"); s != req.parts.end()) session_id = s->second;
    } else {
        const json body = parse_object(req.body, false);
        const auto b64 = optional_string(body, "image_base64");
        if (!b64) return error(400, "invalid_input", "body needs 'image_base64' or a multipart 'image' part");
        png = base64_decode(*b64);
        if (body.contains("annotations")) annotations = body["annotations"];
        session_id = optional_string(body, "session_id");
    }
    if (session_id && !store_.session(*session_id)) return error(404, "unknown_session", "no session " + *session_id);

    const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size());
    const RasterImage img = decode_png(bytes);
    const AnnotationSet ann = annotations.is_null() ? AnnotationSet{}
                                                    : annotations_from_json(annotations, img.width(), img.height());
    ExtractionConfig cfg;
    cfg.max_nodes = config_.max_nodes;
    const InfographicDoc doc = extract_document(img, ann, cfg);
    const json doc_json = to_json(doc);
    const std::string doc_id = store_.add_doc(doc_json);
    if (session_id) {
        store_.update_session(*session_id, [&](json& s, json&) { s["doc_id"] = doc_id; });
    }
    return reply(200, {{"doc_id", doc_id},
                       {"document", doc_json},
                       {"layers", layer_layout(doc)},
                       {"node_count", doc.nodes.size()}});
}

ApiResponse Api::recommend_route(const json& body) {
    if (!model_) return error(503, "model_unavailable", "no model is loaded");
    const auto session_id = optional_string(body, "session_id");
    if (session_id && !store_.session(*session_id)) return error(404, "unknown_session", "no session " + *session_id);

    std::optional<std::string> doc_id = optional_string(body, "doc_id");
    if (!doc_id && !body.contains("document") && session_id) {
        const auto s = store_.session(*session_id);
        if (s->at("doc_id").is_string()) doc_id = s->at("doc_id").get<std::string>();
    }
    json doc_json;
    if (body.contains("document")) {
        doc_json = body["document"];
    } else if (doc_id) {
        const auto stored = store_.doc(*doc_id);
        if (!stored) return error(404, "unknown_document", "no document " + *doc_id);
        doc_json = *stored;
    } else {
        return error(400, "invalid_input", "request needs 'doc_id' or 'document'");
    }
    const InfographicDoc doc = doc_from_json(doc_json);
    const auto violations = validate_doc(doc, config_.max_nodes);
    if (!violations.empty()) {
        json list = json::array();
        for (const auto& v : violations) list.push_back({{"node", v.node_id}, {"rule", v.rule}, {"message", v.message}});
        const bool capacity = std::any_of(violations.begin(), violations.end(),
                                          [](const Violation& v) { return v.rule == "node_count"; });
        return error(422, capacity ? "capacity_exceeded" : "invalid_document", violations.front().message,
                     {{"violations", list}});
    }

    const PreferenceSet prefs =
        body.contains("preferences") && !body["preferences"].is_null() ? preferences_from_json(body["preferences"])
                                                                       : PreferenceSet{};
    RecommendConfig rc;
    rc.n = config_.default_n;
    if (body.contains("n") && !body["n"].is_null()) {
        if (!body["n"].is_number_integer()) throw InvalidInput("'n' must be an integer");
        const auto n = body["n"].get<long long>();
        if (n < 1 || n > kMaxRecommendations)
            return error(422, "invalid_n", "n must be between 1 and " + std::to_string(kMaxRecommendations));
        rc.n = static_cast<int>(n);
    }
    const std::uint64_t seed = request_seed(body);
    const auto palettes = recommend(doc, prefs, *model_, lexicon_, seed, rc, config_.max_nodes);

    json list = json::array();
    for (const auto& p : palettes) list.push_back(to_json(p));
    json out = {{"palettes", list},
                {"request_hash", palettes.empty() ? request_hash(doc, prefs, rc.n) : palettes.front().request_hash},
                {"seed", seed}};
    if (session_id) {
        store_.update_session(*session_id, [&](json& s, json&) {
            s["preferences"] = to_json(prefs);
            if (doc_id) s["doc_id"] = *doc_id;
            s["history"].push_back({{"preferences", to_json(prefs)},
                                    {"palettes", list},
                                    {"chosen", nullptr},
                                    {"timestamp", utc_timestamp()}});
            out["history_index"] = s["history"].size() - 1;
        });
    }
    return reply(200, out);
}

ApiResponse Api::create_session(const json& body) {
    const auto doc_id = optional_string(body, "doc_id");
    if (doc_id && !store_.doc(*doc_id)) return error(404, "unknown_document", "no document " + *doc_id);
    return reply(201, store_.create_session(doc_id));
}

ApiResponse Api::get_session(const std::string& id) {
    const auto s = store_.session(id);
    if (!s) return error(404, "unknown_session", "no session " + id);
    return reply(200, *s);
}

ApiResponse Api::choose(const std::string& id, const json& body) {
    if (!body.contains("index") || !body["index"].is_number_integer())
        throw InvalidInput("'index' must be an integer palette index");
    const long long index = body["index"].get<long long>();
    std::optional<ApiResponse> failure;
    json result;
    const bool found = store_.update_session(id, [&](json& s, json&) {
        auto& history = s["history"];
        if (history.empty()) {
            failure = error(422, "no_history", "session has no recommendations to choose from");
            return;
        }
        long long entry = static_cast<long long>(history.size()) - 1;
        if (body.contains("history_index")) {
            if (!body["history_index"].is_number_integer()) {
                failure = error(400, "invalid_input", "'history_index' must be an integer");
                return;
            }
            entry = body["history_index"].get<long long>();
        }
        if (entry < 0 || entry >= static_cast<long long>(history.size())) {
            failure = error(422, "invalid_history_index", "history index out of range");
            return;
        }
        auto& h = history[static_cast<std::size_t>(entry)];
        if (index < 0 || index >= static_cast<long long>(h["palettes"].size())) {
            failure = error(422, "invalid_index", "palette index out of range");
            return;
        }
        h["chosen"] = index;
        s["preferences"]["exact"] = h["palettes"][static_cast<std::size_t>(index)]["lab"];
        result = s;
    });
    if (!found) return error(404, "unknown_session", "no session " + id);
    if (failure) return *failure;
    return reply(200, result);
}

ApiResponse Api::add_bookmark(const std::string& id, const json& body) {
    if (!body.contains("palette")) throw InvalidInput("body needs a 'palette'");
    const Palette p = palette_from_json(body["palette"]);
    if (p.assignment.empty()) throw InvalidInput("palette has no colours");
    json bookmark;
    const bool found = store_.update_session(id, [&](json& s, json& counters) {
        const long long next = counters.value("bookmark", 0LL) + 1;
        counters["bookmark"] = next;
        bookmark = to_json(p);
        bookmark["id"] = "b" + std::to_string(next);
        bookmark["created"] = utc_timestamp();
        s["bookmarks"].push_back(bookmark);
    });
    if (!found) return error(404, "unknown_session", "no session " + id);
    return reply(201, bookmark);
}

ApiResponse Api::list_bookmarks(const std::string& id) {
    const auto s = store_.session(id);
    if (!s) return error(404, "unknown_session", "no session " + id);
    return reply(200, {{"bookmarks", s->at("bookmarks")}});
}

ApiResponse Api::delete_bookmark(const std::string& id, const std::string& bookmark) {
    bool removed = false;
    const bool found = store_.update_session(id, [&](json& s, json&) {
        auto& list = s["bookmarks"];
        for (auto it = list.begin(); it != list.end(); ++it) {
            if ((*it)["id"] == bookmark) {
                list.erase(it);
                removed = true;
                return;
            }
        }
    });
    if (!found) return error(404, "unknown_session", "no session " + id);
    if (!removed) return error(404, "unknown_bookmark", "no bookmark " + bookmark);
    return {204, "", "application/json"};
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>()) {
    auto& server = impl_->server;
    server.set_payload_max_length(32u << 20);
    auto handler = [&api](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        r.body = req.body;
        r.content_type = req.get_header_value("Content-Type");
        for (const auto& [name, part] : req.files) r.parts[name] = part.content;
        const ApiResponse out = api.handle(r);
        res.status = out.status;
        if (!out.body.empty()) res.set_content(out.body, out.content_type);
    };
    server.Get(R"(/.*)", handler);
    server.Post(R"(/.*)", handler);
    server.Delete(R"(/.*)", handler);
    server.Put(R"(/.*)", handler);
    server.Patch(R"(/.*)", handler);
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(R"({"error":{"code":"internal","message":"unhandled error"}})", "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

int run_server(Api& api, const ServiceConfig& config) {
    HttpServer server(api);
    if (server.bind(config.host, config.port) < 0) return 1;
    return server.listen() ? 0 : 1;
}

}  // namespace palettizer
