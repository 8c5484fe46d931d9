#pragma once

#include "palettizer/features.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace palettizer {

/// A feature vector whose mask marks the colour entries to generate.
struct ImputationRequest {
    FeatureVector vector;
    int n_samples = 1;
};

/// Checks the request against a layout: widths agree, every F column is
/// observed and hidden columns belong to colourable slots. Throws InvalidInput.
void validate_request(const FeatureVector& req, const FeatureLayout& layout);

/// Common surface of the imputation methods compared by the evaluation.
class Imputer {
public:
    virtual ~Imputer() = default;
    virtual std::string name() const = 0;
    /// Returns `n` complete vectors. Observed entries are copied unchanged
    /// and the returned masks equal the request mask.
    virtual std::vector<FeatureVector> impute(const FeatureVector& request, int n, std::uint64_t seed) const = 0;

    std::vector<FeatureVector> impute(const ImputationRequest& req, std::uint64_t seed) const {
        return impute(req.vector, req.n_samples, seed);
    }
};

/// Per-column mean and population standard deviation. Colour columns only
/// count vectors whose slot holds a colour; zero deviations become 1.
struct ColumnMoments {
    std::vector<double> mean;
    std::vector<double> stddev;
};
ColumnMoments column_moments(const std::vector<FeatureVector>& corpus);

/// Replaces hidden colours by the nearest displayable sRGB colour, leaving
/// observed channels untouched.
void snap_hidden_colors(FeatureVector& v);

}  // namespace palettizer
