#include "palettizer/mlp.hpp"

#include <cmath>

namespace palettizer {
namespace {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Mlp::Mlp(std::vector<int> sizes, std::size_t offset) : sizes_(std::move(sizes)), offset_(offset) {
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        weight_at_.push_back(param_count_);
        param_count_ += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
    }
}

Eigen::MatrixXd Mlp::forward(const double* params, const Eigen::MatrixXd& x, Cache* cache) const {
    const double* base = params + offset_;
    Eigen::MatrixXd h = x;
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
    }
    const std::size_t layers = weight_at_.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        ConstMap w(base + weight_at_[l], out, in);
        ConstVecMap b(base + weight_at_[l] + static_cast<std::size_t>(out) * in, out);
        Eigen::MatrixXd pre = w * h;
        pre.colwise() += b;
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->pre.push_back(pre);
        }
        if (l + 1 < layers) {
            h = pre.unaryExpr([](double v) { return v * sigmoid(v); });
        } else {
            h = std::move(pre);
        }
    }
    return h;
}

Eigen::MatrixXd Mlp::backward(const double* params, const Cache& cache, const Eigen::MatrixXd& dy,
                              double* grad) const {
    const double* base = params + offset_;
    double* gbase = grad + offset_;
    Eigen::MatrixXd d = dy;
    for (std::size_t l = weight_at_.size(); l-- > 0;) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        if (l + 1 < weight_at_.size()) {
            // SiLU'(v) = s(v) (1 + v (1 - s(v)))
            d = d.cwiseProduct(cache.pre[l].unaryExpr([](double v) {
                const double s = sigmoid(v);
                return s * (1.0 + v * (1.0 - s));
            }));
        }
        Eigen::Map<Eigen::MatrixXd> gw(gbase + weight_at_[l], out, in);
        Eigen::Map<Eigen::VectorXd> gb(gbase + weight_at_[l] + static_cast<std::size_t>(out) * in, out);
        gw.noalias() += d * cache.inputs[l].transpose();
        gb.noalias() += d.rowwise().sum();
        ConstMap w(base + weight_at_[l], out, in);
        d = w.transpose() * d;
    }
    return d;
}

void Mlp::init(double* params, std::mt19937_64& rng) const {
    double* base = params + offset_;
    for (std::size_t l = 0; l < weight_at_.size(); ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        const double limit = std::sqrt(6.0 / in);
        std::uniform_real_distribution<double> u(-limit, limit);
        const std::size_t nw = static_cast<std::size_t>(out) * in;
        for (std::size_t i = 0; i < nw; ++i) base[weight_at_[l] + i] = u(rng);
        // Shrink the last layer so initial outputs start near zero.
        if (l + 1 == weight_at_.size()) {
            for (std::size_t i = 0; i < nw; ++i) base[weight_at_[l] + i] *= 0.1;
        }
        for (int i = 0; i < out; ++i) base[weight_at_[l] + nw + i] = 0.0;
    }
}

}  // namespace palettizer
