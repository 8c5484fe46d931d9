#include "palettizer/corpus.hpp"

#include "palettizer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

namespace palettizer {
namespace fs = std::filesystem;

namespace {

std::string stem(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

}  // namespace

void write_corpus(const std::string& dir, const std::vector<InfographicDoc>& docs, std::uint64_t seed,
                  const SynthConfig& config, const CorpusWriteOptions& options) {
    const fs::path root(dir);
    fs::create_directories(root / "docs");
    if (options.images) {
        fs::create_directories(root / "images");
        fs::create_directories(root / "annotations");
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        write_json(root / "docs" / (stem(i) + ".json"), to_json(docs[i]));
        if (options.images) {
            save_png(render_document(docs[i]), (root / "images" / (stem(i) + ".png")).string());
            write_json(root / "annotations" / (stem(i) + ".json"), to_json(annotations_for(docs[i])));
        }
    }
    write_json(root / "manifest.json", {{"schema", "palettizer-corpus/1"},
                                        {"count", docs.size()},
                                        {"seed", seed},
                                        {"generator",
                                         {{"width", config.width},
                                          {"height", config.height},
                                          {"color_noise", config.color_noise},
                                          {"max_groups", config.max_groups},
                                          {"max_elements_per_group", config.max_elements_per_group},
                                          {"nest_probability", config.nest_probability},
                                          {"top_level_shrink_probability", config.top_level_shrink_probability}}}});
}

std::vector<InfographicDoc> load_corpus(const std::string& dir) {
    const fs::path docs_dir = fs::path(dir) / "docs";
    if (!fs::is_directory(docs_dir)) throw InvalidInput("no docs/ directory in " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(docs_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<InfographicDoc> docs;
    docs.reserve(files.size());
    for (const auto& f : files) docs.push_back(load_doc(f.string()));
    return docs;
}

std::vector<FeatureVector> featurize_all(const std::vector<InfographicDoc>& docs, std::size_t max_nodes) {
    std::vector<FeatureVector> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(featurize(d, max_nodes));
    return out;
}

Split split_indices(std::size_t n, std::uint64_t seed, double train_fraction) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = std::min(n, static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n))));
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return s;
}

}  // namespace palettizer
