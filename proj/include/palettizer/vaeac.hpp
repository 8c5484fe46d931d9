#pragma once

#include "palettizer/features.hpp"
#include "palettizer/imputer.hpp"
#include "palettizer/mlp.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace palettizer {

struct VaeacConfig {
    int hidden = 256;
    int hidden_layers = 2;
    int latent = 32;
    int epochs = 50;
    int batch_size = 64;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double grad_clip = 5.0;
    double p_hide = 0.5;
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;

    friend bool operator==(const VaeacConfig&, const VaeacConfig&) = default;
};

nlohmann::json to_json(const VaeacConfig& c);
VaeacConfig vaeac_config_from_json(const nlohmann::json& j);

/// Per-column standardisation. One-hot columns keep mean 0 / std 1.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Normalizer fit(const std::vector<FeatureVector>& corpus, const FeatureLayout& layout);
    double forward(int col, double v) const { return (v - mean[col]) / stddev[col]; }
    double inverse(int col, double v) const { return v * stddev[col] + mean[col]; }

    friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

struct TrainReport {
    std::vector<double> train_elbo;       // per epoch, mean per sample
    std::vector<double> validation_elbo;  // per epoch, fixed masks and noise
    int selected_epoch = 0;               // 1-based, argmax validation ELBO
    double wall_seconds = 0.0;
    std::size_t train_size = 0;
    std::size_t validation_size = 0;

    /// Equality ignores wall time, which is the only non-deterministic field.
    friend bool operator==(const TrainReport& a, const TrainReport& b) {
        return a.train_elbo == b.train_elbo && a.validation_elbo == b.validation_elbo &&
               a.selected_epoch == b.selected_epoch && a.train_size == b.train_size &&
               a.validation_size == b.validation_size;
    }
};

nlohmann::json to_json(const TrainReport& r);

/// Variational autoencoder with arbitrary conditioning.
///
/// Three networks share one parameter vector:
///   proposal  q(z | x, b)          sees the full vector during training,
///   prior     p(z | x_observed, b) used at generation time,
///   decoder   p(x_hidden | z, x_observed, b).
/// Inputs are the normalised vector with hidden entries zeroed, concatenated
/// with the mask. Continuous columns get a Gaussian output (mean, log-variance),
/// categorical groups get softmax logits with one extra "absent" class.
class VaeacModel {
public:
    VaeacModel() = default;
    VaeacModel(std::shared_ptr<const FeatureLayout> layout, Normalizer norm, VaeacConfig config);

    const FeatureLayout& layout() const { return *layout_; }
    std::shared_ptr<const FeatureLayout> layout_ptr() const { return layout_; }
    const Normalizer& normalizer() const { return norm_; }
    const VaeacConfig& config() const { return config_; }
    bool spatial() const { return layout_->spatial; }
    int latent_dim() const { return config_.latent; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    void init_params(std::uint64_t seed);

    /// One minibatch in normalised space. `mask` is 1 on hidden entries.
    struct Batch {
        Eigen::MatrixXd x;      // width × B
        Eigen::MatrixXd mask;   // width × B
        Eigen::MatrixXd noise;  // latent × B, standard normal
    };

    struct LossParts {
        double reconstruction = 0.0;  // mean negative log-likelihood of hidden entries
        double kl = 0.0;              // mean KL(proposal ‖ prior), per sample
        double min_kl = 0.0;          // smallest per-sample KL in the batch
    };

    /// Mean negative ELBO over the batch. When `grad` is non-null it must have
    /// params().size() entries and receives the gradient (overwritten).
    double loss(const Batch& batch, std::vector<double>* grad, LossParts* parts = nullptr) const;

    /// Normalised copy of a vector (hidden entries are kept; callers zero them).
    Eigen::VectorXd normalize(const FeatureVector& v) const;

    /// Generates `n` completions of `req`. `temperature` scales the prior
    /// noise; 0 gives the deterministic prior-mean completion.
    std::vector<FeatureVector> impute(const FeatureVector& req, int n, std::uint64_t seed,
                                      double temperature = 1.0) const;

    std::vector<std::uint8_t> to_bytes() const;
    static VaeacModel from_bytes(const std::vector<std::uint8_t>& bytes);
    void save(const std::string& path) const;
    static VaeacModel load(const std::string& path);

    TrainReport report;  // filled by train(); stored in checkpoints

private:
    void build_networks();
    Eigen::MatrixXd observed_inputs(const Batch& b) const;

    std::shared_ptr<const FeatureLayout> layout_;
    Normalizer norm_;
    VaeacConfig config_;
    std::vector<double> params_;

    Mlp proposal_;
    Mlp prior_;
    Mlp decoder_;
    std::vector<int> continuous_;              // column indices
    std::vector<int> categorical_of_column_;   // -1 or group index
};

/// Trains on the corpus, holding out `validation_fraction` for model selection.
/// Throws InvalidInput on an empty corpus or mismatched widths.
std::pair<VaeacModel, TrainReport> train_vaeac(const std::vector<FeatureVector>& corpus, const VaeacConfig& config);

/// Draws a training mask: each colourable colour triple hidden with probability p.
std::vector<std::uint8_t> sample_color_mask(const FeatureVector& v, double p, std::mt19937_64& rng);

/// Adapts a model to full (spatial) requests, stripping columns when the
/// model was trained without spatial features.
class VaeacImputer : public Imputer {
public:
    VaeacImputer(const VaeacModel& model, std::string name, double temperature = 1.0)
        : model_(model), name_(std::move(name)), temperature_(temperature) {}

    std::string name() const override { return name_; }
    using Imputer::impute;
    std::vector<FeatureVector> impute(const FeatureVector& request, int n, std::uint64_t seed) const override;

private:
    const VaeacModel& model_;
    std::string name_;
    double temperature_;
};

}  // namespace palettizer
