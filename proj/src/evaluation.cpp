#include "palettizer/evaluation.hpp"

#include "palettizer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>

namespace palettizer {
namespace {

double mean_delta(const ColorList& x, const ColorList& y) {
    if (x.size() != y.size()) throw InvalidInput("colour lists differ in length");
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += ciede2000(x[i], y[i]);
    return s / static_cast<double>(x.size());
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

ColorList hidden_colors(const FeatureVector& v) {
    ColorList out;
    for (std::size_t s = 0; s < v.layout->slots(); ++s) {
        if (v.color_hidden(s)) out.push_back(v.color(s));
    }
    return out;
}

}  // namespace

double nrmse(const ColorList& truth, const std::vector<ColorList>& imputations, const std::vector<double>& stddev) {
    if (imputations.empty()) throw InvalidInput("nrmse needs at least one imputation");
    if (stddev.size() != 3 * truth.size()) throw InvalidInput("nrmse needs one deviation per dropped entry");
    if (truth.empty()) return 0.0;
    double total = 0.0;
    for (const auto& imp : imputations) {
        if (imp.size() != truth.size()) throw InvalidInput("colour lists differ in length");
        double ss = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double t[3] = {truth[i].l, truth[i].a, truth[i].b};
            const double x[3] = {imp[i].l, imp[i].a, imp[i].b};
            for (int k = 0; k < 3; ++k) {
                const double sd = stddev[3 * i + k] > 0.0 ? stddev[3 * i + k] : 1.0;
                const double e = (x[k] - t[k]) / sd;
                ss += e * e;
            }
        }
        total += std::sqrt(ss / static_cast<double>(3 * truth.size()));
    }
    return total / static_cast<double>(imputations.size());
}

double crs(const ColorList& truth, const std::vector<ColorList>& imputations) {
    double s = 0.0;
    for (const auto& imp : imputations) s += mean_delta(truth, imp);
    return s;
}

double cvs(const std::vector<ColorList>& imputations) {
    double s = 0.0;
    for (std::size_t i = 0; i < imputations.size(); ++i) {
        for (std::size_t j = i + 1; j < imputations.size(); ++j) s += mean_delta(imputations[i], imputations[j]);
    }
    return s;
}

FeatureVector drop_colors(const FeatureVector& truth, double drop_fraction, std::uint64_t seed, std::size_t item,
                          int replicate) {
    FeatureVector v = truth;
    std::fill(v.mask.begin(), v.mask.end(), 0);
    std::vector<std::size_t> colorable;
    for (std::size_t s = 0; s < v.layout->slots(); ++s) {
        if (v.colorable(s)) colorable.push_back(s);
    }
    if (colorable.empty()) return v;
    std::mt19937_64 rng(mix(mix(seed, item), static_cast<std::uint64_t>(replicate)));
    std::shuffle(colorable.begin(), colorable.end(), rng);
    const auto count = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(drop_fraction * static_cast<double>(colorable.size()))), 1,
        colorable.size());
    for (std::size_t i = 0; i < count; ++i) v.set_color_hidden(colorable[i], true);
    return v;
}

const MetricRow& MetricTable::at(const std::string& method) const {
    for (const auto& r : rows) {
        if (r.method == method) return r;
    }
    throw InvalidInput("no metric row for method '" + method + "'");
}

std::vector<double> column_stddev(const std::vector<FeatureVector>& train) {
    if (train.empty()) throw InvalidInput("training corpus is empty");
    return column_moments(train).stddev;
}

MetricTable run_protocol(const std::vector<const Imputer*>& methods, const std::vector<FeatureVector>& test,
                         const std::vector<double>& train_stddev, const EvalProtocolConfig& config) {
    if (test.empty()) throw InvalidInput("test split is empty");
    if (!(config.drop_fraction > 0.0 && config.drop_fraction < 1.0) || config.replicates_per_item < 1 ||
        config.samples_per_replicate < 1)
        throw InvalidInput("invalid protocol configuration");

    MetricTable table;
    for (const auto* m : methods) table.rows.push_back({m->name(), 0.0, 0.0, 0.0});
    for (std::size_t item = 0; item < test.size(); ++item) {
        const FeatureVector& truth_vec = test[item];
        if (static_cast<int>(train_stddev.size()) != truth_vec.width())
            throw InvalidInput("deviation vector does not match test width");
        for (int r = 0; r < config.replicates_per_item; ++r) {
            const FeatureVector masked = drop_colors(truth_vec, config.drop_fraction, config.seed, item, r);
            const ColorList truth = hidden_colors(masked);
            if (truth.empty()) continue;
            std::vector<double> sd;
            std::vector<std::size_t> hidden;
            for (std::size_t s = 0; s < masked.layout->slots(); ++s) {
                if (!masked.color_hidden(s)) continue;
                hidden.push_back(s);
                for (int k = 0; k < 3; ++k) sd.push_back(train_stddev[masked.layout->color_offset[s] + k]);
            }
            const std::uint64_t sample_seed = mix(mix(config.seed ^ 0x5eedull, item), static_cast<std::uint64_t>(r));
            for (std::size_t m = 0; m < methods.size(); ++m) {
                const auto samples = methods[m]->impute(masked, config.samples_per_replicate, sample_seed);
                std::vector<ColorList> imps;
                for (const auto& s : samples) {
                    ColorList c;
                    for (std::size_t slot : hidden) c.push_back(s.color(slot));
                    imps.push_back(std::move(c));
                }
                table.rows[m].nrmse += nrmse(truth, imps, sd);
                table.rows[m].crs += crs(truth, imps);
                table.rows[m].cvs += cvs(imps);
            }
            ++table.items;
        }
    }
    if (table.items == 0) throw InvalidInput("test split has no colourable items");
    for (auto& row : table.rows) {
        row.nrmse /= static_cast<double>(table.items);
        row.crs /= static_cast<double>(table.items);
        row.cvs /= static_cast<double>(table.items);
    }
    return table;
}

void write_csv(std::ostream& out, const MetricTable& table) {
    out << "method,nrmse,crs,cvs\n";
    out << std::setprecision(10);
    for (const auto& r : table.rows) out << r.method << ',' << r.nrmse << ',' << r.crs << ',' << r.cvs << '\n';
}

void write_text_table(std::ostream& out, const MetricTable& table) {
    std::size_t name_w = 6;
    for (const auto& r : table.rows) name_w = std::max(name_w, r.method.size());
    out << std::left << std::setw(static_cast<int>(name_w)) << "method" << std::right << std::setw(10) << "NRMSE"
        << std::setw(10) << "CRS" << std::setw(10) << "CVS" << '\n';
    out << std::string(name_w + 30, '-') << '\n';
    out << std::fixed << std::setprecision(4);
    for (const auto& r : table.rows) {
        out << std::left << std::setw(static_cast<int>(name_w)) << r.method << std::right << std::setw(10) << r.nrmse
            << std::setw(10) << r.crs << std::setw(10) << r.cvs << '\n';
    }
    out << "(" << table.items << " masked test items)\n";
    out.unsetf(std::ios::fixed);
}

}  // namespace palettizer
