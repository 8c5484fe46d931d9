// Command-line front end: corpus generation, training, evaluation,
// extraction, imputation, recommendation and the HTTP service.

#include "palettizer/corpus.hpp"
#include "palettizer/errors.hpp"
#include "palettizer/evaluation.hpp"
#include "palettizer/extraction.hpp"
#include "palettizer/mice.hpp"
#include "palettizer/preferences.hpp"
#include "palettizer/service.hpp"
#include "palettizer/synth.hpp"
#include "palettizer/vaeac.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>

using namespace palettizer;

namespace {

struct TrainOptions {
    VaeacConfig config;
    std::uint64_t split_seed = 0;
};

void add_train_flags(CLI::App* cmd, TrainOptions& o) {
    cmd->add_option("--epochs", o.config.epochs, "Training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--hidden", o.config.hidden, "Hidden layer width")->check(CLI::PositiveNumber);
    cmd->add_option("--layers", o.config.hidden_layers, "Hidden layers per network")->check(CLI::NonNegativeNumber);
    cmd->add_option("--latent", o.config.latent, "Latent dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", o.config.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
    cmd->add_option("--lr", o.config.learning_rate, "Initial learning rate");
    cmd->add_option("--p-hide", o.config.p_hide, "Probability of hiding a colour triple")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--split-seed", o.split_seed, "Seed of the 80/20 train/test split");
}

std::vector<FeatureVector> train_split(const std::vector<FeatureVector>& all, std::uint64_t split_seed) {
    return select(all, split_indices(all.size(), split_seed).train);
}

std::vector<FeatureVector> stripped(const std::vector<FeatureVector>& v) {
    std::vector<FeatureVector> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(strip_spatial(x));
    return out;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

std::pair<std::string, std::string> split_assignment(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
        throw InvalidInput("expected NODE=VALUE, got '" + s + "'");
    return {s.substr(0, eq), s.substr(eq + 1)};
}

PreferenceSet parse_preferences(const std::vector<std::string>& pins, const std::vector<std::string>& words,
                                const std::vector<std::string>& binds) {
    PreferenceSet p;
    for (const auto& pin : pins) {
        const auto [id, hex] = split_assignment(pin);
        p.exact[id] = rgb_to_lab(parse_hex(hex));
    }
    for (const auto& w : words) {
        auto [id, word] = split_assignment(w);
        for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        p.vague[id] = word;
    }
    for (const auto& b : binds) {
        std::vector<std::string> ids;
        std::size_t start = 0;
        while (start <= b.size()) {
            const auto comma = b.find(',', start);
            const std::string id = b.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!id.empty()) ids.push_back(id);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        p.bindings.push_back(std::move(ids));
    }
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"palettizer: structure-aware colour palette recommendation"};
    app.require_subcommand(1);

    // gen-corpus
    std::size_t gen_n = 2000;
    std::uint64_t gen_seed = 7;
    std::string gen_out;
    bool gen_no_images = false;
    auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus");
    gen->add_option("--n", gen_n, "Number of documents")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_flag("--no-images", gen_no_images, "Write documents only");

    // train
    TrainOptions train_opts;
    std::string train_corpus, train_out, train_report;
    bool train_non_spatial = false;
    auto* train = app.add_subcommand("train", "Train a model on the training split of a corpus");
    train->add_option("--corpus", train_corpus, "Corpus directory")->required();
    train->add_option("--out", train_out, "Checkpoint path")->required();
    train->add_option("--seed", train_opts.config.seed, "Training seed");
    train->add_option("--report", train_report, "Write the training report as JSON");
    train->add_flag("--non-spatial", train_non_spatial, "Drop the left/right tree indices");
    add_train_flags(train, train_opts);

    // evaluate
    std::string eval_corpus, eval_model, eval_nonspatial, eval_csv;
    std::uint64_t eval_seed = 0, eval_split_seed = 0;
    EvalProtocolConfig eval_cfg;
    auto* evaluate = app.add_subcommand("evaluate", "Run the 50%-drop protocol on the test split");
    evaluate->add_option("--corpus", eval_corpus, "Corpus directory")->required();
    evaluate->add_option("--model", eval_model, "Spatial model checkpoint")->required();
    evaluate->add_option("--nonspatial-model", eval_nonspatial, "Non-spatial model checkpoint");
    evaluate->add_option("--csv", eval_csv, "Write the metric table as CSV");
    evaluate->add_option("--seed", eval_seed, "Protocol seed");
    evaluate->add_option("--split-seed", eval_split_seed, "Seed of the 80/20 train/test split");
    evaluate->add_option("--replicates", eval_cfg.replicates_per_item, "Masks per test item")
        ->check(CLI::PositiveNumber);
    evaluate->add_option("--samples", eval_cfg.samples_per_replicate, "Imputations per mask")
        ->check(CLI::PositiveNumber);

    // ablate
    TrainOptions ablate_opts;
    std::string ablate_corpus, ablate_csv;
    std::uint64_t ablate_seed = 1;
    auto* ablate = app.add_subcommand("ablate", "Train spatial and non-spatial models and compare with baselines");
    ablate->add_option("--corpus", ablate_corpus, "Corpus directory")->required();
    ablate->add_option("--seed", ablate_seed, "Training and protocol seed");
    ablate->add_option("--csv", ablate_csv, "Write the metric table as CSV");
    add_train_flags(ablate, ablate_opts);

    // extract
    std::string ex_image, ex_ann, ex_out, ex_features;
    std::uint64_t ex_seed = 0;
    auto* extract = app.add_subcommand("extract", "Build a document from a PNG and data-element annotations");
    extract->add_option("--image", ex_image, "PNG image")->required();
    extract->add_option("--annotations", ex_ann, "Annotation JSON");
    extract->add_option("--out", ex_out, "Document JSON output (stdout if omitted)");
    extract->add_option("--features", ex_features, "Also write the feature vector as CSV");
    extract->add_option("--seed", ex_seed, "Unused; extraction is deterministic");

    // impute
    std::string imp_model, imp_doc;
    std::vector<std::string> imp_pins;
    int imp_n = 5;
    std::uint64_t imp_seed = 0;
    double imp_temperature = 1.0;
    auto* impute = app.add_subcommand("impute", "Complete a document's colours with pinned entries observed");
    impute->add_option("--model", imp_model, "Model checkpoint")->required();
    impute->add_option("--doc", imp_doc, "Document JSON")->required();
    impute->add_option("--pin", imp_pins, "NODE=#RRGGBB, repeatable");
    impute->add_option("--n", imp_n, "Samples")->check(CLI::PositiveNumber);
    impute->add_option("--seed", imp_seed, "Sampling seed");
    impute->add_option("--temperature", imp_temperature, "Prior noise scale");

    // recommend
    std::string rec_model, rec_doc, rec_lexicon = std::string(PALETTIZER_DATA_DIR) + "/lexicon.json";
    std::vector<std::string> rec_pins, rec_words, rec_binds;
    int rec_n = 5;
    std::uint64_t rec_seed = 0;
    auto* rec = app.add_subcommand("recommend", "Recommend palettes under preferences");
    rec->add_option("--model", rec_model, "Model checkpoint")->required();
    rec->add_option("--doc", rec_doc, "Document JSON")->required();
    rec->add_option("--lexicon", rec_lexicon, "Lexicon JSON");
    rec->add_option("--pin", rec_pins, "NODE=#RRGGBB, repeatable");
    rec->add_option("--word", rec_words, "NODE=word, repeatable");
    rec->add_option("--bind", rec_binds, "Comma-separated node ids sharing one colour, repeatable");
    rec->add_option("--n", rec_n, "Number of palettes")->check(CLI::PositiveNumber);
    rec->add_option("--seed", rec_seed, "Sampling seed");

    // serve
    std::optional<std::string> srv_config;
    std::string srv_model, srv_lexicon, srv_store, srv_host;
    int srv_port = -1;
    std::optional<std::uint64_t> srv_seed;
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--config", srv_config, "Service config JSON (PALETTIZER_CONFIG overrides)");
    serve->add_option("--model", srv_model, "Model checkpoint");
    serve->add_option("--lexicon", srv_lexicon, "Lexicon JSON");
    serve->add_option("--store", srv_store, "Session store path");
    serve->add_option("--host", srv_host, "Listen address");
    serve->add_option("--port", srv_port, "Listen port");
    serve->add_option("--seed", srv_seed, "Pin every request to this seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            SynthConfig cfg;
            const auto docs = generate_corpus(gen_n, gen_seed, cfg);
            write_corpus(gen_out, docs, gen_seed, cfg, {!gen_no_images});
            std::cout << "wrote " << docs.size() << " documents to " << gen_out << '\n';
            return 0;
        }
        if (*train) {
            auto vecs = train_split(featurize_all(load_corpus(train_corpus)), train_opts.split_seed);
            if (train_non_spatial) vecs = stripped(vecs);
            auto [model, report] = train_vaeac(vecs, train_opts.config);
            model.save(train_out);
            std::cout << "trained on " << report.train_size << " vectors (" << report.validation_size
                      << " held out); selected epoch " << report.selected_epoch << " of "
                      << report.validation_elbo.size() << ", validation ELBO "
                      << report.validation_elbo[report.selected_epoch - 1] << ", " << report.wall_seconds << " s\n";
            if (!train_report.empty()) {
                std::ofstream(train_report) << to_json(report).dump(1) << '\n';
            }
            return 0;
        }
        if (*evaluate || *ablate) {
            const bool is_ablate = ablate->parsed();
            const std::string corpus_dir = is_ablate ? ablate_corpus : eval_corpus;
            const std::uint64_t split_seed = is_ablate ? ablate_opts.split_seed : eval_split_seed;
            const auto all = featurize_all(load_corpus(corpus_dir));
            const auto split = split_indices(all.size(), split_seed);
            const auto train_vecs = select(all, split.train);
            const auto test_vecs = select(all, split.test);

            std::optional<VaeacModel> spatial, non_spatial;
            if (is_ablate) {
                auto cfg = ablate_opts.config;
                cfg.seed = ablate_seed;
                spatial = train_vaeac(train_vecs, cfg).first;
                non_spatial = train_vaeac(stripped(train_vecs), cfg).first;
                eval_cfg.seed = ablate_seed;
            } else {
                spatial = VaeacModel::load(eval_model);
                if (!eval_nonspatial.empty()) non_spatial = VaeacModel::load(eval_nonspatial);
                eval_cfg.seed = eval_seed;
            }
            VaeacImputer vaeac(*spatial, "VAEAC");
            std::optional<VaeacImputer> vaeac_ns;
            if (non_spatial) vaeac_ns.emplace(*non_spatial, "VAEAC-nonspatial");
            MiceImputer mice(train_vecs);
            MeanImputer mean(train_vecs);
            std::vector<const Imputer*> methods = {&vaeac};
            if (vaeac_ns) methods.push_back(&*vaeac_ns);
            methods.push_back(&mice);
            methods.push_back(&mean);

            const auto table = run_protocol(methods, test_vecs, column_stddev(train_vecs), eval_cfg);
            write_text_table(std::cout, table);
            const std::string csv = is_ablate ? ablate_csv : eval_csv;
            if (!csv.empty()) {
                std::ofstream out(csv);
                write_csv(out, table);
            }
            bool ok = true;
            for (const auto& r : table.rows) {
                ok &= std::isfinite(r.nrmse) && std::isfinite(r.crs) && std::isfinite(r.cvs) && r.nrmse >= 0 &&
                      r.crs >= 0 && r.cvs >= 0;
            }
            if (!ok) std::cerr << "metric invariant violated (negative or non-finite value)\n";
            return ok ? 0 : 2;
        }
        if (*extract) {
            const RasterImage img = load_png(ex_image);
            const AnnotationSet ann =
                ex_ann.empty() ? AnnotationSet{} : annotations_from_json(read_json(ex_ann), img.width(), img.height());
            const InfographicDoc doc = extract_document(img, ann);
            if (ex_out.empty()) {
                std::cout << to_json(doc).dump(1) << '\n';
            } else {
                save_doc(doc, ex_out);
            }
            if (!ex_features.empty()) {
                std::ofstream out(ex_features);
                const FeatureVector v = featurize(doc);
                write_csv_header(out, *v.layout);
                write_csv_row(out, v);
            }
            return 0;
        }
        if (*impute) {
            const VaeacModel model = VaeacModel::load(imp_model);
            const InfographicDoc doc = load_doc(imp_doc);
            const PreferenceSet prefs = parse_preferences(imp_pins, {}, {});
            validate_preferences(prefs, doc);
            const ImputationRequest req = to_request(doc, prefs, imp_n);
            FeatureVector request = req.vector;
            if (!model.spatial()) request = strip_spatial(request);
            const auto samples = model.impute(request, imp_n, imp_seed, imp_temperature);
            nlohmann::json out = nlohmann::json::array();
            for (const auto& s : samples) out.push_back(to_json(s));
            std::cout << out.dump(1) << '\n';
            return 0;
        }
        if (*rec) {
            const VaeacModel model = VaeacModel::load(rec_model);
            const VaeacImputer imputer(model, "VAEAC");
            const InfographicDoc doc = load_doc(rec_doc);
            const Lexicon lexicon = Lexicon::load(rec_lexicon);
            const PreferenceSet prefs = parse_preferences(rec_pins, rec_words, rec_binds);
            RecommendConfig rc;
            rc.n = rec_n;
            const auto palettes = recommend(doc, prefs, imputer, lexicon, rec_seed, rc);
            nlohmann::json out = nlohmann::json::array();
            for (const auto& p : palettes) out.push_back(to_json(p));
            std::cout << out.dump(1) << '\n';
            return 0;
        }
        if (*serve) {
            ServiceConfig cfg = load_service_config(srv_config);
            if (!srv_model.empty()) cfg.model_path = srv_model;
            if (!srv_lexicon.empty()) cfg.lexicon_path = srv_lexicon;
            if (!srv_store.empty()) cfg.store_path = srv_store;
            if (!srv_host.empty()) cfg.host = srv_host;
            if (srv_port >= 0) cfg.port = srv_port;
            if (srv_seed) {
                cfg.seed_policy = SeedPolicy::fixed;
                cfg.seed = *srv_seed;
            }
            std::shared_ptr<const VaeacModel> model;
            std::shared_ptr<const Imputer> imputer;
            if (!cfg.model_path.empty()) {
                model = std::make_shared<const VaeacModel>(VaeacModel::load(cfg.model_path));
                imputer = std::shared_ptr<const Imputer>(
                    new VaeacImputer(*model, "VAEAC"), [model](const Imputer* p) { delete p; });
            } else {
                std::cerr << "warning: no model configured; /api/recommend will answer 503\n";
            }
            Api api(cfg, imputer, Lexicon::load(cfg.lexicon_path));
            std::cout << "listening on " << cfg.host << ':' << cfg.port << '\n' << std::flush;
            return run_server(api, cfg);
        }
    } catch (const palettizer::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
