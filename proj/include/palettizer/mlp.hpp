#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <random>
#include <vector>

namespace palettizer {

/// Fully connected network with SiLU hidden activations and a linear output.
/// Weights live in an external flat buffer starting at `offset`, so several
/// networks can share one parameter vector and one optimiser.
class Mlp {
public:
    Mlp() = default;
    /// `sizes` = {inputs, hidden..., outputs}.
    Mlp(std::vector<int> sizes, std::size_t offset);

    std::size_t param_count() const { return param_count_; }
    std::size_t offset() const { return offset_; }
    int inputs() const { return sizes_.front(); }
    int outputs() const { return sizes_.back(); }
    const std::vector<int>& sizes() const { return sizes_; }

    struct Cache {
        std::vector<Eigen::MatrixXd> inputs;  // input to each layer
        std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
    };

    /// Column-major batch: one sample per column.
    Eigen::MatrixXd forward(const double* params, const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

    /// Accumulates parameter gradients into `grad` and returns dL/dx.
    Eigen::MatrixXd backward(const double* params, const Cache& cache, const Eigen::MatrixXd& dy,
                             double* grad) const;

    /// He-style uniform initialisation, zero biases.
    void init(double* params, std::mt19937_64& rng) const;

private:
    std::vector<int> sizes_;
    std::size_t offset_ = 0;
    std::size_t param_count_ = 0;
    std::vector<std::size_t> weight_at_;  // per layer, relative to offset_
};

}  // namespace palettizer
