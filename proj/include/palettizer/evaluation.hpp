#pragma once

#include "palettizer/imputer.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace palettizer {

/// Colour triples of the dropped slots, in slot order.
using ColorList = std::vector<LabColor>;

/// Mean over imputations of the RMSE of dropped entries, each entry divided
/// by its column's standard deviation. `stddev` is aligned with the flattened
/// L,a,b entries of `truth`; zero deviations count as 1.
double nrmse(const ColorList& truth, const std::vector<ColorList>& imputations, const std::vector<double>& stddev);

/// Sum over imputations of the mean ΔE00 to the truth.
double crs(const ColorList& truth, const std::vector<ColorList>& imputations);

/// Sum over unordered pairs of imputations of their mean ΔE00.
double cvs(const std::vector<ColorList>& imputations);

struct EvalProtocolConfig {
    double drop_fraction = 0.5;  // of colourable colour triples
    int replicates_per_item = 5;
    int samples_per_replicate = 5;
    std::uint64_t seed = 0;
};

/// Hides round(drop_fraction × colourable) triples, at least one. The choice
/// depends only on (seed, item, replicate), so every method sees the same masks.
FeatureVector drop_colors(const FeatureVector& truth, double drop_fraction, std::uint64_t seed, std::size_t item,
                          int replicate);

struct MetricRow {
    std::string method;
    double nrmse = 0.0;
    double crs = 0.0;
    double cvs = 0.0;
};

struct MetricTable {
    std::vector<MetricRow> rows;
    std::size_t items = 0;  // expanded test items (test vectors × replicates)

    const MetricRow& at(const std::string& method) const;
};

/// Column standard deviations of a training corpus (population form); colour
/// columns only count vectors whose slot holds a colour.
std::vector<double> column_stddev(const std::vector<FeatureVector>& train);

/// Runs every method on the held-out vectors. Throws InvalidInput on an
/// empty test split.
MetricTable run_protocol(const std::vector<const Imputer*>& methods, const std::vector<FeatureVector>& test,
                         const std::vector<double>& train_stddev, const EvalProtocolConfig& config);

void write_csv(std::ostream& out, const MetricTable& table);
void write_text_table(std::ostream& out, const MetricTable& table);

}  // namespace palettizer
