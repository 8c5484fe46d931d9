#include "palettizer/imputer.hpp"

#include "palettizer/errors.hpp"

#include <algorithm>
#include <cmath>

namespace palettizer {

void validate_request(const FeatureVector& req, const FeatureLayout& layout) {
    if (!req.layout || *req.layout != layout) throw InvalidInput("request layout does not match the model");
    if (req.width() != layout.width() || static_cast<int>(req.mask.size()) != layout.width())
        throw InvalidInput("request width " + std::to_string(req.width()) + " does not match model width " +
                           std::to_string(layout.width()));
    for (int c = 0; c < layout.non_color_width; ++c) {
        if (req.mask[c]) throw InvalidInput("non-colour column '" + layout.names[c] + "' must be observed");
    }
    for (std::size_t s = 0; s < layout.slots(); ++s) {
        const int o = layout.color_offset[s];
        const bool hidden = req.mask[o] || req.mask[o + 1] || req.mask[o + 2];
        if (hidden && !req.colorable(s))
            throw InvalidInput("slot " + std::to_string(s) + " has no colour and cannot be imputed");
    }
}

ColumnMoments column_moments(const std::vector<FeatureVector>& corpus) {
    if (corpus.empty()) throw InvalidInput("corpus is empty");
    const FeatureLayout& layout = *corpus.front().layout;
    const int w = layout.width();
    std::vector<double> count(w, 0.0);
    ColumnMoments m{std::vector<double>(w, 0.0), std::vector<double>(w, 0.0)};
    std::vector<bool> use(w);
    auto counted = [&](const FeatureVector& v) {
        std::fill(use.begin(), use.end(), true);
        for (std::size_t s = 0; s < layout.slots(); ++s) {
            if (v.colorable(s)) continue;
            const int o = layout.color_offset[s];
            use[o] = use[o + 1] = use[o + 2] = false;
        }
    };
    for (const auto& v : corpus) {
        if (v.width() != w) throw InvalidInput("corpus vectors differ in width");
        counted(v);
        for (int c = 0; c < w; ++c) {
            if (!use[c]) continue;
            m.mean[c] += v.values[c];
            count[c] += 1.0;
        }
    }
    for (int c = 0; c < w; ++c) m.mean[c] = count[c] > 0 ? m.mean[c] / count[c] : 0.0;
    for (const auto& v : corpus) {
        counted(v);
        for (int c = 0; c < w; ++c) {
            if (use[c]) m.stddev[c] += (v.values[c] - m.mean[c]) * (v.values[c] - m.mean[c]);
        }
    }
    for (int c = 0; c < w; ++c) {
        m.stddev[c] = count[c] > 0 ? std::sqrt(m.stddev[c] / count[c]) : 0.0;
        if (m.stddev[c] <= 1e-12) m.stddev[c] = 1.0;
    }
    return m;
}

void snap_hidden_colors(FeatureVector& v) {
    for (std::size_t s = 0; s < v.layout->slots(); ++s) {
        const int o = v.layout->color_offset[s];
        if (!(v.mask[o] || v.mask[o + 1] || v.mask[o + 2])) continue;
        const LabColor snapped = clamp_to_gamut(v.color(s));
        const double vals[3] = {snapped.l, snapped.a, snapped.b};
        for (int k = 0; k < 3; ++k) {
            if (v.mask[o + k]) v.values[o + k] = vals[k];
        }
    }
}

}  // namespace palettizer
