#pragma once

#include "palettizer/imputer.hpp"
#include "palettizer/vaeac.hpp"

#include <Eigen/Dense>

namespace palettizer {

struct MiceConfig {
    int sweeps = 10;
    double ridge = 1e-2;  // added to the standardised covariance diagonal
};

/// Chained linear-regression imputation with Gaussian noise.
///
/// Every column is regressed on all others from a single fit of the
/// standardised corpus covariance: with precision P, the regression of
/// column j has coefficients -P_jk / P_jj and residual variance 1 / P_jj.
/// Hidden columns start at the column mean and are resampled in column
/// order for a fixed number of sweeps.
class MiceImputer : public Imputer {
public:
    MiceImputer(const std::vector<FeatureVector>& corpus, MiceConfig config = {});

    std::string name() const override { return "MICE"; }
    using Imputer::impute;
    std::vector<FeatureVector> impute(const FeatureVector& request, int n, std::uint64_t seed) const override;

private:
    std::shared_ptr<const FeatureLayout> layout_;
    Normalizer norm_;
    MiceConfig config_;
    Eigen::MatrixXd precision_;
};

/// Fits on `corpus` and imputes in one call.
std::vector<FeatureVector> mice_impute(const std::vector<FeatureVector>& corpus, const ImputationRequest& req,
                                       std::uint64_t seed, MiceConfig config = {});

/// Fills hidden entries with training-set column means, each colour column
/// averaged over the vectors whose slot holds a colour.
class MeanImputer : public Imputer {
public:
    explicit MeanImputer(const std::vector<FeatureVector>& corpus);

    std::string name() const override { return "mean"; }
    using Imputer::impute;
    std::vector<FeatureVector> impute(const FeatureVector& request, int n, std::uint64_t seed) const override;

private:
    std::shared_ptr<const FeatureLayout> layout_;
    std::vector<double> mean_;
};

}  // namespace palettizer
