#include "palettizer/preferences.hpp"

#include "palettizer/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace palettizer {
namespace {

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : ", ") + w;
    return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
    x ^= x >> 31;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 29;
    return x;
}

LabColor color_from_json(const nlohmann::json& j) {
    if (j.is_string()) return rgb_to_lab(parse_hex(j.get<std::string>()));
    if (j.is_object() && j.contains("L") && j.contains("a") && j.contains("b") && j["L"].is_number() &&
        j["a"].is_number() && j["b"].is_number())
        return {j["L"].get<double>(), j["a"].get<double>(), j["b"].get<double>()};
    if (j.is_array() && j.size() == 3 && j[0].is_number() && j[1].is_number() && j[2].is_number())
        return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    throw InvalidInput("colour must be \"#RRGGBB\", {L,a,b} or [L,a,b]");
}

// Index of the member that donates its colour to a binding set.
std::size_t draw_member(const std::vector<std::string>& candidates, const std::map<std::string, long long>& areas,
                        std::mt19937_64& rng) {
    std::vector<double> w(candidates.size(), 0.0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto it = areas.find(candidates[i]);
        w[i] = it == areas.end() ? 0.0 : static_cast<double>(std::max(0LL, it->second));
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    if (total <= 0.0) return std::min(candidates.size() - 1, static_cast<std::size_t>(r * candidates.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i] / total;
        if (r < acc && w[i] > 0.0) return i;
    }
    for (std::size_t i = w.size(); i-- > 0;) {
        if (w[i] > 0.0) return i;
    }
    return 0;
}

void bind_palette(Palette& p, const std::vector<std::string>& members, const std::vector<std::string>& candidates,
                  const std::map<std::string, long long>& areas, std::mt19937_64& rng) {
    const std::string& donor = candidates[draw_member(candidates, areas, rng)];
    const auto it = p.assignment.find(donor);
    if (it == p.assignment.end()) return;
    const LabColor c = it->second;
    for (const auto& m : members) {
        if (p.assignment.count(m)) p.assignment[m] = c;
    }
}

}  // namespace

UnknownWord::UnknownWord(std::string word, std::vector<std::string> nearest)
    : InvalidPreference("unknown_word",
                        "unknown word '" + word + "'" + (nearest.empty() ? "" : "; did you mean " + join(nearest) + "?")),
      word_(std::move(word)),
      nearest_(std::move(nearest)) {}

void validate_preferences(const PreferenceSet& prefs, const InfographicDoc& doc) {
    auto require_colorable = [&](const std::string& id) {
        const ElementNode* n = doc.find(id);
        if (!n) throw InvalidPreference("unknown_node", "no node with id '" + id + "'");
        if (!n->colorable()) throw InvalidPreference("not_colorable", "node '" + id + "' has no colour slot");
    };
    for (const auto& [id, c] : prefs.exact) require_colorable(id);
    for (const auto& [id, w] : prefs.vague) {
        require_colorable(id);
        if (prefs.exact.count(id))
            throw InvalidPreference("duplicate_preference", "node '" + id + "' has both an exact colour and a word");
    }
    std::set<std::string> bound;
    for (const auto& set : prefs.bindings) {
        if (set.empty()) throw InvalidPreference("empty_binding", "binding sets must not be empty");
        std::optional<LabColor> pin;
        for (const auto& id : set) {
            require_colorable(id);
            if (!bound.insert(id).second)
                throw InvalidPreference("overlapping_bindings", "node '" + id + "' appears in more than one binding");
            const auto it = prefs.exact.find(id);
            if (it == prefs.exact.end()) continue;
            if (pin && !(*pin == it->second))
                throw InvalidPreference("conflicting_pins", "binding containing '" + id + "' pins different colours");
            pin = it->second;
        }
    }
}

nlohmann::json to_json(const PreferenceSet& prefs) {
    nlohmann::json exact = nlohmann::json::object();
    for (const auto& [id, c] : prefs.exact) exact[id] = {{"L", c.l}, {"a", c.a}, {"b", c.b}};
    nlohmann::json vague = nlohmann::json::object();
    for (const auto& [id, w] : prefs.vague) vague[id] = w;
    return {{"exact", exact}, {"vague", vague}, {"bindings", prefs.bindings}};
}

PreferenceSet preferences_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("preferences must be an object");
    PreferenceSet p;
    if (j.contains("exact")) {
        const auto& e = j["exact"];
        if (!e.is_object()) throw InvalidInput("'exact' must map node ids to colours");
        for (const auto& [id, c] : e.items()) p.exact[id] = color_from_json(c);
    }
    if (j.contains("vague")) {
        const auto& v = j["vague"];
        if (!v.is_object()) throw InvalidInput("'vague' must map node ids to words");
        for (const auto& [id, w] : v.items()) {
            if (!w.is_string()) throw InvalidInput("vague word for '" + id + "' must be a string");
            p.vague[id] = lowercase(w.get<std::string>());
        }
    }
    if (j.contains("bindings")) {
        const auto& b = j["bindings"];
        if (!b.is_array()) throw InvalidInput("'bindings' must be a list of id lists");
        for (const auto& set : b) {
            if (!set.is_array()) throw InvalidInput("each binding must be a list of ids");
            std::vector<std::string> ids;
            for (const auto& id : set) {
                if (!id.is_string()) throw InvalidInput("binding ids must be strings");
                ids.push_back(id.get<std::string>());
            }
            p.bindings.push_back(std::move(ids));
        }
    }
    return p;
}

std::string_view to_string(WordCategory c) {
    switch (c) {
        case WordCategory::color_name: return "color-name";
        case WordCategory::object: return "object";
        case WordCategory::affect: return "affect";
        case WordCategory::lightness: return "lightness";
    }
    return "color-name";
}

WordCategory parse_word_category(std::string_view s) {
    if (s == "color-name") return WordCategory::color_name;
    if (s == "object") return WordCategory::object;
    if (s == "affect") return WordCategory::affect;
    if (s == "lightness") return WordCategory::lightness;
    throw InvalidInput("unknown word category '" + std::string(s) + "'");
}

Lexicon::Lexicon(std::map<std::string, LexiconEntry> entries) : entries_(std::move(entries)) {
    for (const auto& [word, e] : entries_) {
        if (word.empty() || word != lowercase(word)) throw InvalidInput("lexicon word '" + word + "' must be lowercase");
        if (e.colors.empty()) throw InvalidInput("lexicon word '" + word + "' has no colours");
    }
}

Lexicon Lexicon::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw InvalidInput("lexicon must be a JSON list");
    std::map<std::string, LexiconEntry> entries;
    try {
        for (const auto& item : j) {
            const std::string word = item.at("word").get<std::string>();
            LexiconEntry e;
            e.category = parse_word_category(item.at("category").get<std::string>());
            for (const auto& c : item.at("colors")) e.colors.push_back(rgb_to_lab(parse_hex(c.get<std::string>())));
            if (!entries.emplace(word, std::move(e)).second) throw InvalidInput("duplicate lexicon word '" + word + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed lexicon: ") + e.what());
    }
    return Lexicon(std::move(entries));
}

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open lexicon " + path);
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("malformed lexicon: ") + e.what());
    }
}

nlohmann::json Lexicon::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [word, e] : entries_) {
        nlohmann::json colors = nlohmann::json::array();
        for (const auto& c : e.colors) colors.push_back(to_hex(c));
        out.push_back({{"word", word}, {"category", to_string(e.category)}, {"colors", colors}});
    }
    return out;
}

const LexiconEntry& Lexicon::at(const std::string& word) const {
    const auto it = entries_.find(word);
    if (it == entries_.end()) throw UnknownWord(word, nearest(word));
    return it->second;
}

std::vector<std::string> Lexicon::nearest(const std::string& word, std::size_t count) const {
    std::vector<std::pair<std::size_t, std::string>> scored;
    for (const auto& [w, e] : entries_) scored.emplace_back(edit_distance(word, w), w);
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(count, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

std::vector<PreferenceSet> expand_vague(const PreferenceSet& prefs, const Lexicon& lexicon, int k,
                                        std::uint64_t seed) {
    if (k < 1) throw InvalidInput("k must be at least 1");
    if (prefs.vague.empty()) return {prefs};
    std::vector<PreferenceSet> variants(k, prefs);
    for (auto& v : variants) v.vague.clear();
    std::mt19937_64 rng(seed);
    for (const auto& [id, word] : prefs.vague) {
        const auto& colors = lexicon.at(word).colors;
        std::vector<std::size_t> picks;
        if (colors.size() >= static_cast<std::size_t>(k)) {
            std::vector<std::size_t> idx(colors.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            picks.assign(idx.begin(), idx.begin() + k);
        } else {
            std::uniform_int_distribution<std::size_t> u(0, colors.size() - 1);
            for (int i = 0; i < k; ++i) picks.push_back(u(rng));
        }
        for (int i = 0; i < k; ++i) variants[i].exact[id] = colors[picks[i]];
    }
    return variants;
}

ImputationRequest to_request(const InfographicDoc& doc, const PreferenceSet& concrete, int n_samples,
                             std::size_t max_nodes) {
    if (!concrete.concrete()) throw InvalidInput("preferences still contain vague words");
    if (n_samples < 1) throw InvalidInput("n_samples must be at least 1");
    for (const auto& [id, c] : concrete.exact) {
        const ElementNode* n = doc.find(id);
        if (!n) throw InvalidPreference("unknown_node", "no node with id '" + id + "'");
        if (!n->colorable()) throw InvalidPreference("not_colorable", "node '" + id + "' has no colour slot");
    }
    ImputationRequest req{featurize(doc, max_nodes), n_samples};
    FeatureVector& v = req.vector;
    for (std::size_t s = 0; s < v.layout->slots(); ++s) {
        if (!v.colorable(s)) continue;
        const auto it = concrete.exact.find(v.slot_ids[s]);
        if (it != concrete.exact.end()) {
            v.set_color(s, it->second);
            v.set_color_hidden(s, false);
        } else {
            v.set_color_hidden(s, true);
        }
    }
    return req;
}

nlohmann::json to_json(const Palette& p) {
    nlohmann::json colors = nlohmann::json::object();
    nlohmann::json lab = nlohmann::json::object();
    for (const auto& [id, c] : p.assignment) {
        colors[id] = to_hex(c);
        lab[id] = {c.l, c.a, c.b};
    }
    return {{"colors", colors},
            {"lab", lab},
            {"source", p.source == PaletteSource::model ? "model" : "user"},
            {"request_hash", p.request_hash},
            {"sample_index", p.sample_index}};
}

Palette palette_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("palette must be an object");
    Palette p;
    try {
        if (j.contains("lab")) {
            for (const auto& [id, c] : j.at("lab").items()) p.assignment[id] = color_from_json(c);
        } else if (j.contains("colors")) {
            const auto& colors = j.at("colors");
            if (!colors.is_object()) throw InvalidInput("'colors' must map node ids to colours");
            for (const auto& [id, c] : colors.items()) p.assignment[id] = color_from_json(c);
        } else {
            throw InvalidInput("palette needs 'colors' or 'lab'");
        }
        const std::string source = j.value("source", std::string("user"));
        if (source != "model" && source != "user") throw InvalidInput("palette source must be 'model' or 'user'");
        p.source = source == "model" ? PaletteSource::model : PaletteSource::user;
        p.request_hash = j.value("request_hash", std::string());
        p.sample_index = j.value("sample_index", 0);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed palette: ") + e.what());
    }
    return p;
}

double palette_distance(const Palette& a, const Palette& b) {
    double worst = 0.0;
    for (const auto& [id, c] : a.assignment) {
        const auto it = b.assignment.find(id);
        if (it != b.assignment.end()) worst = std::max(worst, ciede2000(c, it->second));
    }
    return worst;
}

std::vector<Palette> apply_bindings(std::vector<Palette> palettes,
                                    const std::vector<std::vector<std::string>>& bindings,
                                    const std::map<std::string, long long>& node_areas, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& p : palettes) {
        for (const auto& set : bindings) {
            if (!set.empty()) bind_palette(p, set, set, node_areas, rng);
        }
    }
    return palettes;
}

std::string request_hash(const InfographicDoc& doc, const PreferenceSet& prefs, int n) {
    const std::string text = to_json(doc).dump() + "\n" + to_json(prefs).dump() + "\n" + std::to_string(n);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<Palette> recommend(const InfographicDoc& doc, const PreferenceSet& prefs, const Imputer& model,
                               const Lexicon& lexicon, std::uint64_t seed, const RecommendConfig& config,
                               std::size_t max_nodes) {
    if (config.n < 1) throw InvalidInput("n must be at least 1");
    validate_preferences(prefs, doc);
    const auto variants = expand_vague(prefs, lexicon, config.k, mix(seed, 1));
    const std::string hash = request_hash(doc, prefs, config.n);

    std::vector<ImputationRequest> requests;
    for (const auto& v : variants) requests.push_back(to_request(doc, v, config.n, max_nodes));

    std::mt19937_64 pick(mix(seed, 2));
    std::vector<Palette> kept;
    int sample_index = 0;
    for (int round = 0; round <= config.max_rounds; ++round) {
        std::vector<Palette> pool;
        for (std::size_t v = 0; v < requests.size(); ++v) {
            const auto samples =
                model.impute(requests[v].vector, config.n, mix(seed, 1000 + round * 131 + static_cast<std::uint64_t>(v)));
            for (const auto& s : samples) {
                Palette p;
                p.source = PaletteSource::model;
                p.request_hash = hash;
                for (std::size_t slot = 0; slot < s.layout->slots(); ++slot) {
                    if (s.colorable(slot)) p.assignment[s.slot_ids[slot]] = s.color(slot);
                }
                pool.push_back(std::move(p));
            }
        }
        std::shuffle(pool.begin(), pool.end(), pick);
        for (auto& p : pool) {
            const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const Palette& q) {
                return palette_distance(p, q) < config.duplicate_threshold;
            });
            if (duplicate) continue;
            p.sample_index = sample_index++;
            kept.push_back(std::move(p));
        }
        if (static_cast<int>(kept.size()) >= config.n) break;
    }

    std::map<std::string, long long> areas;
    for (const auto& node : doc.nodes) areas[node.id] = node.pixel_area;
    std::mt19937_64 bind_rng(mix(seed, 3));
    for (auto& p : kept) {
        for (const auto& set : prefs.bindings) {
            std::vector<std::string> pinned;
            for (const auto& id : set) {
                if (prefs.exact.count(id)) pinned.push_back(id);
            }
            bind_palette(p, set, pinned.empty() ? set : pinned, areas, bind_rng);
        }
    }
    if (static_cast<int>(kept.size()) > config.n) kept.resize(config.n);
    return kept;
}

}  // namespace palettizer
