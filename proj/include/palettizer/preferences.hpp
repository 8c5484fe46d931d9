#pragma once

#include "palettizer/features.hpp"
#include "palettizer/imputer.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace palettizer {

/// User constraints addressed to document nodes.
struct PreferenceSet {
    std::map<std::string, LabColor> exact;
    std::map<std::string, std::string> vague;
    std::vector<std::vector<std::string>> bindings;

    bool concrete() const { return vague.empty(); }
    friend bool operator==(const PreferenceSet&, const PreferenceSet&) = default;
};

/// Throws InvalidPreference (reason codes: unknown_node, not_colorable,
/// duplicate_preference, overlapping_bindings, empty_binding, conflicting_pins)
/// on violation.
void validate_preferences(const PreferenceSet& prefs, const InfographicDoc& doc);

/// Exact colours serialise as "#RRGGBB"; a Lab object {L,a,b} is also accepted.
nlohmann::json to_json(const PreferenceSet& prefs);
PreferenceSet preferences_from_json(const nlohmann::json& j);

enum class WordCategory { color_name, object, affect, lightness };

std::string_view to_string(WordCategory c);
WordCategory parse_word_category(std::string_view s);

struct LexiconEntry {
    WordCategory category = WordCategory::color_name;
    std::vector<LabColor> colors;
};

/// Vague words and the colours they evoke. Words are lowercase.
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::map<std::string, LexiconEntry> entries);

    /// JSON list of {word, category, colors: ["#RRGGBB", ...]}.
    static Lexicon from_json(const nlohmann::json& j);
    static Lexicon load(const std::string& path);
    nlohmann::json to_json() const;

    bool contains(const std::string& word) const { return entries_.count(word) > 0; }
    /// Throws UnknownWord with the closest known words.
    const LexiconEntry& at(const std::string& word) const;
    std::vector<std::string> nearest(const std::string& word, std::size_t count = 3) const;
    const std::map<std::string, LexiconEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, LexiconEntry> entries_;
};

/// Turns vague words into `k` concrete variants. For every vague node, k
/// colours are drawn from its word's entry without replacement (with
/// replacement when the entry is shorter than k); variant i pins the node to
/// the i-th draw. Nodes draw independently of each other.
std::vector<PreferenceSet> expand_vague(const PreferenceSet& prefs, const Lexicon& lexicon, int k,
                                        std::uint64_t seed);

/// Features from the document with pinned colour triples observed and every
/// other colourable triple hidden.
ImputationRequest to_request(const InfographicDoc& doc, const PreferenceSet& concrete, int n_samples = 1,
                             std::size_t max_nodes = kDefaultMaxNodes);

enum class PaletteSource { model, user };

struct Palette {
    std::map<std::string, LabColor> assignment;
    PaletteSource source = PaletteSource::model;
    std::string request_hash;
    int sample_index = 0;

    friend bool operator==(const Palette&, const Palette&) = default;
};

nlohmann::json to_json(const Palette& p);
Palette palette_from_json(const nlohmann::json& j);

/// Largest per-node ΔE00 between two palettes over their shared nodes.
double palette_distance(const Palette& a, const Palette& b);

/// Within each binding set one member is drawn with probability proportional
/// to its pixel area (uniformly if all areas are zero) and its colour is
/// copied to the rest. Draws are independent per palette.
std::vector<Palette> apply_bindings(std::vector<Palette> palettes,
                                    const std::vector<std::vector<std::string>>& bindings,
                                    const std::map<std::string, long long>& node_areas, std::uint64_t seed);

struct RecommendConfig {
    int n = 5;
    int k = 3;
    double duplicate_threshold = 2.0;  // max per-node ΔE00 below which palettes coincide
    int max_rounds = 4;                // extra sampling rounds when dedupe leaves too few
};

/// Stable FNV-1a digest of (document, preferences, n) as 16 hex digits.
std::string request_hash(const InfographicDoc& doc, const PreferenceSet& prefs, int n);

/// expand → impute per variant → seeded pooling → dedupe → bindings → first n.
/// Exact pins keep their value in every palette: a binding set containing
/// pinned members draws its colour from those members only.
std::vector<Palette> recommend(const InfographicDoc& doc, const PreferenceSet& prefs, const Imputer& model,
                               const Lexicon& lexicon, std::uint64_t seed, const RecommendConfig& config = {},
                               std::size_t max_nodes = kDefaultMaxNodes);

}  // namespace palettizer
