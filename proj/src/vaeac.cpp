#include "palettizer/vaeac.hpp"

#include "palettizer/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

namespace palettizer {
namespace {

constexpr int kFormatVersion = 1;
constexpr std::string_view kFormatName = "palettizer-vaeac";

// Log-variances pass through c·tanh(s/c) so they stay in [-c, c].
constexpr double kLogVarBound = 6.0;

double bound(double s) { return kLogVarBound * std::tanh(s / kLogVarBound); }
double bound_grad(double s) {
    const double t = std::tanh(s / kLogVarBound);
    return 1.0 - t * t;
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    return x;
}

Eigen::MatrixXd standard_normal(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) m(r, c) = n01(rng);
    }
    return m;
}

}  // namespace

nlohmann::json to_json(const VaeacConfig& c) {
    return {{"hidden", c.hidden},
            {"hidden_layers", c.hidden_layers},
            {"latent", c.latent},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"momentum", c.momentum},
            {"grad_clip", c.grad_clip},
            {"p_hide", c.p_hide},
            {"validation_fraction", c.validation_fraction},
            {"seed", c.seed}};
}

VaeacConfig vaeac_config_from_json(const nlohmann::json& j) {
    VaeacConfig c;
    c.hidden = j.value("hidden", c.hidden);
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.latent = j.value("latent", c.latent);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.momentum = j.value("momentum", c.momentum);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.p_hide = j.value("p_hide", c.p_hide);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.seed = j.value("seed", c.seed);
    return c;
}

nlohmann::json to_json(const TrainReport& r) {
    return {{"train_elbo", r.train_elbo},         {"validation_elbo", r.validation_elbo},
            {"selected_epoch", r.selected_epoch}, {"wall_seconds", r.wall_seconds},
            {"train_size", r.train_size},         {"validation_size", r.validation_size}};
}

Normalizer Normalizer::fit(const std::vector<FeatureVector>& corpus, const FeatureLayout& layout) {
    const int w = layout.width();
    Normalizer n;
    n.mean.assign(w, 0.0);
    n.stddev.assign(w, 1.0);
    std::vector<bool> categorical(w, false);
    for (const auto& g : layout.categorical) {
        for (int c = g.offset; c < g.offset + g.size; ++c) categorical[c] = true;
    }
    if (corpus.empty()) return n;
    const double count = static_cast<double>(corpus.size());
    for (int c = 0; c < w; ++c) {
        if (categorical[c]) continue;
        double s = 0.0;
        for (const auto& v : corpus) s += v.values[c];
        const double m = s / count;
        double ss = 0.0;
        for (const auto& v : corpus) ss += (v.values[c] - m) * (v.values[c] - m);
        const double sd = std::sqrt(ss / count);
        n.mean[c] = m;
        n.stddev[c] = sd > 1e-12 ? sd : 1.0;
    }
    return n;
}

VaeacModel::VaeacModel(std::shared_ptr<const FeatureLayout> layout, Normalizer norm, VaeacConfig config)
    : layout_(std::move(layout)), norm_(std::move(norm)), config_(config) {
    if (static_cast<int>(norm_.mean.size()) != layout_->width() ||
        static_cast<int>(norm_.stddev.size()) != layout_->width())
        throw InvalidInput("normalizer width does not match layout");
    build_networks();
}

void VaeacModel::build_networks() {
    const int w = layout_->width();
    categorical_of_column_.assign(w, -1);
    for (std::size_t g = 0; g < layout_->categorical.size(); ++g) {
        const auto& grp = layout_->categorical[g];
        for (int c = grp.offset; c < grp.offset + grp.size; ++c) categorical_of_column_[c] = static_cast<int>(g);
    }
    continuous_.clear();
    for (int c = 0; c < w; ++c) {
        if (categorical_of_column_[c] < 0) continuous_.push_back(c);
    }
    int decoder_out = 2 * static_cast<int>(continuous_.size());
    for (const auto& g : layout_->categorical) decoder_out += g.size + 1;

    auto sizes = [&](int in, int out) {
        std::vector<int> s = {in};
        for (int l = 0; l < config_.hidden_layers; ++l) s.push_back(config_.hidden);
        s.push_back(out);
        return s;
    };
    const int latent = config_.latent;
    std::size_t offset = 0;
    proposal_ = Mlp(sizes(2 * w, 2 * latent), offset);
    offset += proposal_.param_count();
    prior_ = Mlp(sizes(2 * w, 2 * latent), offset);
    offset += prior_.param_count();
    decoder_ = Mlp(sizes(latent + 2 * w, decoder_out), offset);
    offset += decoder_.param_count();
    params_.assign(offset, 0.0);
}

void VaeacModel::init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    proposal_.init(params_.data(), rng);
    prior_.init(params_.data(), rng);
    decoder_.init(params_.data(), rng);
}

Eigen::VectorXd VaeacModel::normalize(const FeatureVector& v) const {
    Eigen::VectorXd out(v.width());
    for (int c = 0; c < v.width(); ++c) out(c) = norm_.forward(c, v.values[c]);
    return out;
}

Eigen::MatrixXd VaeacModel::observed_inputs(const Batch& b) const {
    const int w = layout_->width();
    Eigen::MatrixXd in(2 * w, b.x.cols());
    in.topRows(w) = b.x.cwiseProduct((1.0 - b.mask.array()).matrix());
    in.bottomRows(w) = b.mask;
    return in;
}

double VaeacModel::loss(const Batch& batch, std::vector<double>* grad, LossParts* parts) const {
    const int w = layout_->width();
    const int latent = config_.latent;
    const Eigen::Index n = batch.x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const int n_cont = static_cast<int>(continuous_.size());

    Eigen::MatrixXd prior_in = observed_inputs(batch);
    Eigen::MatrixXd prop_in(2 * w, n);
    prop_in.topRows(w) = batch.x;
    prop_in.bottomRows(w) = batch.mask;

    Mlp::Cache prior_cache, prop_cache, dec_cache;
    const Eigen::MatrixXd p_out = prior_.forward(params_.data(), prior_in, grad ? &prior_cache : nullptr);
    const Eigen::MatrixXd q_out = proposal_.forward(params_.data(), prop_in, grad ? &prop_cache : nullptr);
    const Eigen::MatrixXd mu_p = p_out.topRows(latent);
    const Eigen::MatrixXd lv_p = p_out.bottomRows(latent).unaryExpr(&bound);
    const Eigen::MatrixXd mu_q = q_out.topRows(latent);
    const Eigen::MatrixXd lv_q = q_out.bottomRows(latent).unaryExpr(&bound);
    const Eigen::MatrixXd sd_q = (0.5 * lv_q.array()).exp().matrix();
    const Eigen::MatrixXd z = mu_q + sd_q.cwiseProduct(batch.noise);

    Eigen::MatrixXd dec_in(latent + 2 * w, n);
    dec_in.topRows(latent) = z;
    dec_in.bottomRows(2 * w) = prior_in;
    const Eigen::MatrixXd d_out = decoder_.forward(params_.data(), dec_in, grad ? &dec_cache : nullptr);

    Eigen::MatrixXd d_dout;
    if (grad) d_dout = Eigen::MatrixXd::Zero(d_out.rows(), n);

    double nll = 0.0;
    for (int i = 0; i < n_cont; ++i) {
        const int col = continuous_[i];
        for (Eigen::Index s = 0; s < n; ++s) {
            if (batch.mask(col, s) == 0.0) continue;
            const double mu = d_out(i, s);
            const double raw = d_out(n_cont + i, s);
            const double lv = bound(raw);
            const double diff = batch.x(col, s) - mu;
            const double prec = std::exp(-lv);
            nll += 0.5 * (kLog2Pi + lv + diff * diff * prec);
            if (grad) {
                d_dout(i, s) = -diff * prec * inv_n;
                d_dout(n_cont + i, s) = 0.5 * (1.0 - diff * diff * prec) * bound_grad(raw) * inv_n;
            }
        }
    }
    int cat_row = 2 * n_cont;
    for (const auto& g : layout_->categorical) {
        const int k = g.size + 1;
        for (Eigen::Index s = 0; s < n; ++s) {
            bool hidden = false;
            int cls = g.size;
            for (int c = 0; c < g.size; ++c) {
                hidden |= batch.mask(g.offset + c, s) != 0.0;
                if (batch.x(g.offset + c, s) > 0.5) cls = c;
            }
            if (!hidden) continue;
            const Eigen::VectorXd logits = d_out.block(cat_row, s, k, 1);
            const double mx = logits.maxCoeff();
            const Eigen::VectorXd e = (logits.array() - mx).exp().matrix();
            const double sum = e.sum();
            nll += std::log(sum) + mx - logits(cls);
            if (grad) {
                for (int c = 0; c < k; ++c) d_dout(cat_row + c, s) = (e(c) / sum - (c == cls ? 1.0 : 0.0)) * inv_n;
            }
        }
        cat_row += k;
    }

    const Eigen::ArrayXXd prec_p = (-lv_p.array()).exp();
    const Eigen::ArrayXXd var_q = lv_q.array().exp();
    const Eigen::ArrayXXd dmu = (mu_q - mu_p).array();
    const Eigen::ArrayXXd kl_terms = 0.5 * (lv_p.array() - lv_q.array() + (var_q + dmu * dmu) * prec_p - 1.0);
    const Eigen::ArrayXd kl_per_sample = kl_terms.colwise().sum().transpose();
    const double kl = kl_per_sample.sum();

    if (parts) {
        parts->reconstruction = nll * inv_n;
        parts->kl = kl * inv_n;
        parts->min_kl = n > 0 ? kl_per_sample.minCoeff() : 0.0;
    }

    if (grad) {
        grad->assign(params_.size(), 0.0);
        const Eigen::MatrixXd d_dec_in = decoder_.backward(params_.data(), dec_cache, d_dout, grad->data());
        const Eigen::ArrayXXd dz = d_dec_in.topRows(latent).array();

        const Eigen::ArrayXXd dkl_dmu_q = dmu * prec_p * inv_n;
        const Eigen::ArrayXXd dkl_dlv_q = 0.5 * (var_q * prec_p - 1.0) * inv_n;
        const Eigen::ArrayXXd dkl_dlv_p = 0.5 * (1.0 - (var_q + dmu * dmu) * prec_p) * inv_n;

        const Eigen::ArrayXXd d_mu_q = dz + dkl_dmu_q;
        const Eigen::ArrayXXd d_lv_q = dz * batch.noise.array() * 0.5 * sd_q.array() + dkl_dlv_q;
        const Eigen::ArrayXXd d_mu_p = -dkl_dmu_q;
        const Eigen::ArrayXXd d_lv_p = dkl_dlv_p;

        Eigen::MatrixXd d_q(2 * latent, n), d_p(2 * latent, n);
        d_q.topRows(latent) = d_mu_q.matrix();
        d_q.bottomRows(latent) =
            (d_lv_q * q_out.bottomRows(latent).unaryExpr(&bound_grad).array()).matrix();
        d_p.topRows(latent) = d_mu_p.matrix();
        d_p.bottomRows(latent) =
            (d_lv_p * p_out.bottomRows(latent).unaryExpr(&bound_grad).array()).matrix();
        proposal_.backward(params_.data(), prop_cache, d_q, grad->data());
        prior_.backward(params_.data(), prior_cache, d_p, grad->data());
    }
    return (nll + kl) * inv_n;
}

std::vector<FeatureVector> VaeacModel::impute(const FeatureVector& req, int n, std::uint64_t seed,
                                              double temperature) const {
    validate_request(req, *layout_);
    if (n < 1) throw InvalidInput("n_samples must be at least 1");
    const int w = layout_->width();
    const int latent = config_.latent;

    Batch b;
    const Eigen::VectorXd xn = normalize(req);
    b.x = xn.replicate(1, n);
    b.mask.resize(w, n);
    for (int c = 0; c < w; ++c) b.mask.row(c).setConstant(req.mask[c] ? 1.0 : 0.0);

    const Eigen::MatrixXd prior_in = observed_inputs(b);
    const Eigen::MatrixXd p_out = prior_.forward(params_.data(), prior_in);
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd eps = standard_normal(latent, n, rng);
    const Eigen::MatrixXd sd_p = (0.5 * p_out.bottomRows(latent).unaryExpr(&bound).array()).exp().matrix();
    const Eigen::MatrixXd z = p_out.topRows(latent) + temperature * sd_p.cwiseProduct(eps);

    Eigen::MatrixXd dec_in(latent + 2 * w, n);
    dec_in.topRows(latent) = z;
    dec_in.bottomRows(2 * w) = prior_in;
    const Eigen::MatrixXd d_out = decoder_.forward(params_.data(), dec_in);

    std::vector<FeatureVector> out(n, req);
    for (std::size_t i = 0; i < continuous_.size(); ++i) {
        const int col = continuous_[i];
        if (!req.mask[col]) continue;
        for (int s = 0; s < n; ++s) out[s].values[col] = norm_.inverse(col, d_out(static_cast<Eigen::Index>(i), s));
    }
    for (auto& v : out) snap_hidden_colors(v);
    return out;
}

std::vector<std::uint8_t> VaeacModel::to_bytes() const {
    nlohmann::json j = {{"format", kFormatName},
                        {"version", kFormatVersion},
                        {"layout", to_json(*layout_)},
                        {"normalizer", {{"mean", norm_.mean}, {"std", norm_.stddev}}},
                        {"config", to_json(config_)},
                        {"seed", config_.seed},
                        {"report", to_json(report)},
                        {"params", params_}};
    return nlohmann::json::to_cbor(j);
}

VaeacModel VaeacModel::from_bytes(const std::vector<std::uint8_t>& bytes) {
    try {
        const nlohmann::json j = nlohmann::json::from_cbor(bytes);
        if (j.at("format").get<std::string>() != kFormatName) throw InvalidInput("not a model checkpoint");
        if (j.at("version").get<int>() != kFormatVersion) throw InvalidInput("unsupported checkpoint version");
        Normalizer norm;
        norm.mean = j.at("normalizer").at("mean").get<std::vector<double>>();
        norm.stddev = j.at("normalizer").at("std").get<std::vector<double>>();
        VaeacModel m(layout_from_json(j.at("layout")), std::move(norm), vaeac_config_from_json(j.at("config")));
        auto params = j.at("params").get<std::vector<double>>();
        if (params.size() != m.params_.size()) throw InvalidInput("checkpoint parameter count mismatch");
        m.params_ = std::move(params);
        const auto& r = j.at("report");
        m.report.train_elbo = r.at("train_elbo").get<std::vector<double>>();
        m.report.validation_elbo = r.at("validation_elbo").get<std::vector<double>>();
        m.report.selected_epoch = r.at("selected_epoch").get<int>();
        m.report.wall_seconds = r.at("wall_seconds").get<double>();
        m.report.train_size = r.at("train_size").get<std::size_t>();
        m.report.validation_size = r.at("validation_size").get<std::size_t>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
    }
}

void VaeacModel::save(const std::string& path) const {
    const auto bytes = to_bytes();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

VaeacModel VaeacModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_bytes(bytes);
}

std::vector<std::uint8_t> sample_color_mask(const FeatureVector& v, double p, std::mt19937_64& rng) {
    std::vector<std::uint8_t> mask(v.width(), 0);
    std::bernoulli_distribution hide(p);
    for (std::size_t s = 0; s < v.layout->slots(); ++s) {
        if (!v.colorable(s)) continue;
        if (hide(rng)) {
            const int o = v.layout->color_offset[s];
            mask[o] = mask[o + 1] = mask[o + 2] = 1;
        }
    }
    return mask;
}

std::pair<VaeacModel, TrainReport> train_vaeac(const std::vector<FeatureVector>& corpus, const VaeacConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (corpus.empty()) throw InvalidInput("training corpus is empty");
    const auto layout = corpus.front().layout;
    for (const auto& v : corpus) {
        if (v.width() != layout->width() || *v.layout != *layout)
            throw InvalidInput("training corpus has mixed vector widths");
    }
    if (cfg.batch_size < 1 || cfg.epochs < 1 || cfg.latent < 1 || cfg.hidden < 1)
        throw InvalidInput("invalid training configuration");

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::size_t n_val = 0;
    if (corpus.size() >= 2) {
        n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.validation_fraction * corpus.size())));
        n_val = std::min(n_val, corpus.size() - 1);
    }
    std::vector<const FeatureVector*> train_set, val_set;
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val_set : train_set).push_back(&corpus[order[i]]);
    if (val_set.empty()) val_set = train_set;

    std::vector<FeatureVector> train_copy;
    train_copy.reserve(train_set.size());
    for (const auto* v : train_set) train_copy.push_back(*v);
    VaeacModel model(layout, Normalizer::fit(train_copy, *layout), cfg);
    model.init_params(mix(cfg.seed, 1));

    const int w = layout->width();
    auto normalized_matrix = [&](const std::vector<const FeatureVector*>& set) {
        Eigen::MatrixXd m(w, static_cast<Eigen::Index>(set.size()));
        for (std::size_t i = 0; i < set.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = model.normalize(*set[i]);
        return m;
    };
    const Eigen::MatrixXd x_train = normalized_matrix(train_set);

    // Validation masks and noise are drawn once so epochs are comparable.
    VaeacModel::Batch val;
    {
        std::mt19937_64 vr(mix(cfg.seed, 2));
        val.x = normalized_matrix(val_set);
        val.mask.resize(w, static_cast<Eigen::Index>(val_set.size()));
        for (std::size_t i = 0; i < val_set.size(); ++i) {
            const auto m = sample_color_mask(*val_set[i], cfg.p_hide, vr);
            for (int c = 0; c < w; ++c) val.mask(c, static_cast<Eigen::Index>(i)) = m[c];
        }
        val.noise = standard_normal(cfg.latent, static_cast<int>(val_set.size()), vr);
    }

    const std::size_t n_train = train_set.size();
    const std::size_t bs = std::min<std::size_t>(cfg.batch_size, n_train);
    const std::size_t steps_per_epoch = (n_train + bs - 1) / bs;
    const double total_steps = static_cast<double>(steps_per_epoch * cfg.epochs);

    std::vector<double> velocity(model.params().size(), 0.0);
    std::vector<double> grad;
    std::vector<double> best_params = model.params();
    double best_val = -std::numeric_limits<double>::infinity();

    TrainReport report;
    report.train_size = n_train;
    report.validation_size = n_val;

    std::vector<std::size_t> idx(n_train);
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n_train; start += bs) {
            const std::size_t end = std::min(n_train, start + bs);
            const auto b = static_cast<Eigen::Index>(end - start);
            VaeacModel::Batch batch;
            batch.x.resize(w, b);
            batch.mask.resize(w, b);
            for (Eigen::Index k = 0; k < b; ++k) {
                const std::size_t item = idx[start + static_cast<std::size_t>(k)];
                batch.x.col(k) = x_train.col(static_cast<Eigen::Index>(item));
                const auto m = sample_color_mask(*train_set[item], cfg.p_hide, rng);
                for (int c = 0; c < w; ++c) batch.mask(c, k) = m[c];
            }
            batch.noise = standard_normal(cfg.latent, static_cast<int>(b), rng);

            const double l = model.loss(batch, &grad);
            epoch_loss += l * static_cast<double>(b);

            double norm2 = 0.0;
            for (double g : grad) norm2 += g * g;
            const double norm = std::sqrt(norm2);
            const double scale = (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;
            const double lr =
                cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
            auto& p = model.params();
            for (std::size_t i = 0; i < p.size(); ++i) {
                velocity[i] = cfg.momentum * velocity[i] - lr * scale * grad[i];
                p[i] += velocity[i];
            }
            ++step;
        }
        report.train_elbo.push_back(-epoch_loss / static_cast<double>(n_train));
        const double v = -model.loss(val, nullptr);
        report.validation_elbo.push_back(v);
        if (v > best_val) {
            best_val = v;
            best_params = model.params();
            report.selected_epoch = epoch + 1;
        }
    }
    model.params() = std::move(best_params);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    model.report = report;
    return {std::move(model), report};
}

std::vector<FeatureVector> VaeacImputer::impute(const FeatureVector& request, int n, std::uint64_t seed) const {
    if (model_.spatial() || !request.layout->spatial) return model_.impute(request, n, seed, temperature_);
    const FeatureVector stripped = strip_spatial(request);
    const auto samples = model_.impute(stripped, n, seed, temperature_);
    std::vector<FeatureVector> out(n, request);
    for (int i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < request.layout->slots(); ++s) {
            if (request.color_hidden(s)) {
                const int src = samples[i].layout->color_offset[s];
                const int dst = request.layout->color_offset[s];
                for (int k = 0; k < 3; ++k) {
                    if (request.mask[dst + k]) out[i].values[dst + k] = samples[i].values[src + k];
                }
            }
        }
    }
    return out;
}

}  // namespace palettizer
