#include "palettizer/mice.hpp"

#include "palettizer/errors.hpp"

#include <cmath>
#include <random>

namespace palettizer {
namespace {

std::shared_ptr<const FeatureLayout> corpus_layout(const std::vector<FeatureVector>& corpus) {
    if (corpus.empty()) throw InvalidInput("baseline corpus is empty");
    const auto layout = corpus.front().layout;
    for (const auto& v : corpus) {
        if (*v.layout != *layout) throw InvalidInput("baseline corpus has mixed vector widths");
    }
    return layout;
}

}  // namespace

MiceImputer::MiceImputer(const std::vector<FeatureVector>& corpus, MiceConfig config)
    : layout_(corpus_layout(corpus)), config_(config) {
    norm_ = Normalizer::fit(corpus, *layout_);
    const int w = layout_->width();
    // One-hot columns are standardised too; the regression is purely linear.
    for (const auto& g : layout_->categorical) {
        for (int c = g.offset; c < g.offset + g.size; ++c) {
            double s = 0.0, ss = 0.0;
            for (const auto& v : corpus) s += v.values[c];
            const double m = s / static_cast<double>(corpus.size());
            for (const auto& v : corpus) ss += (v.values[c] - m) * (v.values[c] - m);
            const double sd = std::sqrt(ss / static_cast<double>(corpus.size()));
            norm_.mean[c] = m;
            norm_.stddev[c] = sd > 1e-12 ? sd : 1.0;
        }
    }
    Eigen::MatrixXd z(static_cast<Eigen::Index>(corpus.size()), w);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (int c = 0; c < w; ++c) z(static_cast<Eigen::Index>(i), c) = norm_.forward(c, corpus[i].values[c]);
    }
    Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(corpus.size());
    cov.diagonal().array() += config_.ridge;
    precision_ = cov.ldlt().solve(Eigen::MatrixXd::Identity(w, w));
}

std::vector<FeatureVector> MiceImputer::impute(const FeatureVector& request, int n, std::uint64_t seed) const {
    validate_request(request, *layout_);
    if (n < 1) throw InvalidInput("n_samples must be at least 1");
    const int w = layout_->width();
    std::vector<int> hidden;
    for (int c = 0; c < w; ++c) {
        if (request.mask[c]) hidden.push_back(c);
    }
    std::vector<FeatureVector> out(n, request);
    if (hidden.empty()) return out;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    Eigen::VectorXd base(w);
    for (int c = 0; c < w; ++c) base(c) = request.mask[c] ? 0.0 : norm_.forward(c, request.values[c]);

    for (int s = 0; s < n; ++s) {
        Eigen::VectorXd z = base;
        for (int sweep = 0; sweep < config_.sweeps; ++sweep) {
            for (int j : hidden) {
                const double pjj = precision_(j, j);
                const double dot = precision_.row(j).dot(z) - pjj * z(j);
                z(j) = -dot / pjj + n01(rng) / std::sqrt(pjj);
            }
        }
        for (int j : hidden) out[s].values[j] = norm_.inverse(j, z(j));
        snap_hidden_colors(out[s]);
    }
    return out;
}

std::vector<FeatureVector> mice_impute(const std::vector<FeatureVector>& corpus, const ImputationRequest& req,
                                       std::uint64_t seed, MiceConfig config) {
    return MiceImputer(corpus, config).impute(req, seed);
}

MeanImputer::MeanImputer(const std::vector<FeatureVector>& corpus)
    : layout_(corpus_layout(corpus)), mean_(column_moments(corpus).mean) {}

std::vector<FeatureVector> MeanImputer::impute(const FeatureVector& request, int n, std::uint64_t) const {
    validate_request(request, *layout_);
    if (n < 1) throw InvalidInput("n_samples must be at least 1");
    FeatureVector filled = request;
    for (int c = 0; c < layout_->width(); ++c) {
        if (request.mask[c]) filled.values[c] = mean_[c];
    }
    return std::vector<FeatureVector>(n, filled);
}

}  // namespace palettizer
