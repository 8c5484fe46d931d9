#pragma once

#include "palettizer/features.hpp"
#include "palettizer/synth.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace palettizer {

/// On-disk corpus:
///   manifest.json           {"schema", "count", "seed", "generator"}
///   docs/000000.json        one document each
///   images/000000.png       optional renders
///   annotations/000000.json optional annotation sets matching the renders
struct CorpusWriteOptions {
    bool images = true;
};

void write_corpus(const std::string& dir, const std::vector<InfographicDoc>& docs, std::uint64_t seed,
                  const SynthConfig& config, const CorpusWriteOptions& options = {});

/// Documents in file-name order. Throws InvalidInput when the directory or a
/// document is unreadable.
std::vector<InfographicDoc> load_corpus(const std::string& dir);

/// Featurises every document, skipping none; throws CapacityError on oversize.
std::vector<FeatureVector> featurize_all(const std::vector<InfographicDoc>& docs,
                                         std::size_t max_nodes = kDefaultMaxNodes);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded shuffle, first round(train_fraction × n) items train.
Split split_indices(std::size_t n, std::uint64_t seed, double train_fraction = 0.8);

template <typename T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(items[i]);
    return out;
}

}  // namespace palettizer
