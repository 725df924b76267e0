#include <casimac/casimac.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace casimac;

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

constexpr std::uint64_t kDefaultSeed = 0;

/// Metadata comment lines written at the top of every CSV output.
std::vector<std::string> csv_header(const std::string& command, std::uint64_t seed) {
    return {"casimac " + command, "tool_version " CASIMAC_VERSION, "seed " + std::to_string(seed)};
}

void write_comments(std::ostream& out, const std::vector<std::string>& lines) {
    for (const auto& l : lines) out << "# " << l << '\n';
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

nlohmann::json json_header(const std::string& command, std::uint64_t seed) {
    return {{"format_version", 1}, {"tool_version", CASIMAC_VERSION}, {"command", command}, {"seed", seed}};
}

void write_json(const std::string& path, const nlohmann::json& doc) {
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
}

/// Features in the model's column order; labels are encoded against the model's class names when present.
struct ModelInput {
    FeatureMatrix features;
    std::optional<std::vector<ClassIndex>> labels;
};

ModelInput read_for_model(const CasimacModel& model, const std::string& path, const std::string& label_column,
                          bool require_labels) {
    const CsvTable table = read_csv(path);
    const bool has_labels = !label_column.empty() && table.column(label_column).has_value();
    if (require_labels && !has_labels) throw DataError("missing label column '" + label_column + "'");
    FeatureTable ft = extract_features(table, has_labels ? label_column : "", &model.feature_names());
    ModelInput in{std::move(ft.features), std::nullopt};
    if (has_labels) {
        std::vector<ClassIndex> labels;
        const auto& names = model.class_names();
        for (std::size_t i = 0; i < ft.raw_labels->size(); ++i) {
            const auto& raw = (*ft.raw_labels)[i];
            const auto it = std::find(names.begin(), names.end(), raw);
            if (it == names.end()) {
                throw DataError("line " + std::to_string(table.line_numbers[i]) + ": label '" + raw +
                                "' is not a class of the model");
            }
            labels.push_back(static_cast<ClassIndex>(it - names.begin()));
        }
        in.labels = std::move(labels);
    }
    return in;
}

std::vector<std::string> zero_support_warnings(const CasimacModel& model, std::span<const ClassIndex> truth,
                                               std::span<const ClassIndex> predicted) {
    std::vector<std::string> w;
    std::vector<std::size_t> support(model.class_count(), 0), hits(model.class_count(), 0);
    for (auto y : truth) ++support[y];
    for (auto y : predicted) ++hits[y];
    for (std::size_t k = 0; k < model.class_count(); ++k) {
        if (support[k] > 0 && hits[k] == 0) {
            w.push_back("class '" + model.class_names()[k] + "' is never predicted; its precision counts as 0");
        }
    }
    return w;
}

// ---- subcommand options -------------------------------------------------

struct TransformFlags {
    std::optional<double> gamma;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::size_t k_alpha = 1;
    std::size_t k_beta = 1;
    std::string metric = "euclidean";

    TransformConfig config() const {
        if (gamma && (alpha || beta)) throw ConfigError("use either --gamma or --alpha/--beta");
        if (gamma) return gamma_config(*gamma, k_alpha, k_beta, metric);
        if (alpha || beta) {
            const TransformConfig cfg{alpha.value_or(0.0), beta.value_or(0.0), k_alpha, k_beta, metric};
            find_semimetric(cfg.metric);
            return cfg;
        }
        return gamma_config(1.0, k_alpha, k_beta, metric);
    }
};

struct GprFlags {
    double nu = 2.5;
    int restarts = 4;
    std::optional<double> noise;

    GprConfig config() const {
        GprConfig cfg;
        cfg.nu = nu;
        cfg.restarts = restarts;
        if (noise) cfg.noise_variance = {*noise, *noise, *noise};
        cfg.validate();
        return cfg;
    }
};

void add_gpr_flags(CLI::App* app, GprFlags& g, bool with_nu) {
    if (with_nu) app->add_option("--nu", g.nu, "Matern smoothness (0.5, 1.5 or 2.5)")->capture_default_str();
    app->add_option("--restarts", g.restarts, "extra seeded optimizer restarts")->capture_default_str();
    app->add_option("--noise", g.noise, "pin the white-noise variance to this value");
}

int run_synth(std::size_t count, std::uint64_t seed, const std::string& out_path) {
    const LabeledData d = synth_quadrants(count, seed);
    auto out = open_output(out_path);
    write_csv(out, d, "label", csv_header("synth", seed));
    return kOk;
}

int run_train(const std::string& data_path, const std::string& label_col, const TransformFlags& tf, const GprFlags& gf,
              bool no_standardize, std::uint64_t seed, const std::string& out_path) {
    const LabeledData data = load_csv(data_path, label_col);
    const TransformConfig cfg = tf.config();
    const CasimacModel model = fit(data, cfg, GprBackend(gf.config()), seed, FitOptions{!no_standardize});
    for (const auto& w : model.warnings()) std::cerr << "warning: " << w << '\n';
    save_model(model, out_path);
    return kOk;
}

int run_predict(const std::string& model_path, const std::string& data_path, const std::string& label_col, bool proba,
                std::size_t mc_samples, std::uint64_t seed, unsigned threads, const std::string& out_path) {
    const CasimacModel model = load_model(model_path);
    const ModelInput in = read_for_model(model, data_path, label_col, false);
    const McConfig mc{mc_samples, seed};
    const auto pred = model.predict_index(in.features);
    Eigen::MatrixXd probs;
    if (proba) probs = model.predict_proba(in.features, mc, threads);
    auto out = open_output(out_path);
    auto meta = csv_header("predict", seed);
    meta.push_back("mc_samples " + std::to_string(mc_samples));
    write_comments(out, meta);
    out << "row,predicted";
    if (proba) {
        for (const auto& c : model.class_names()) out << ',' << quote_csv("p_" + c);
    }
    out << '\n';
    for (std::size_t i = 0; i < pred.size(); ++i) {
        out << i << ',' << quote_csv(model.class_names()[pred[i]]);
        if (proba) {
            for (Eigen::Index k = 0; k < probs.cols(); ++k) out << ',' << format_number(probs(static_cast<Eigen::Index>(i), k));
        }
        out << '\n';
    }
    return kOk;
}

int run_evaluate(const std::string& model_path, const std::string& data_path, const std::string& label_col,
                 const std::string& truth_rule, std::size_t mc_samples, std::uint64_t seed, unsigned threads,
                 const std::vector<std::size_t>& top_ks, const std::string& out_path) {
    const CasimacModel model = load_model(model_path);
    ModelInput in = read_for_model(model, data_path, truth_rule.empty() ? label_col : "", truth_rule.empty());
    if (!truth_rule.empty()) {
        if (truth_rule != "quadrants") throw ConfigError("unknown truth rule '" + truth_rule + "'");
        if (model.class_count() != 4 || in.features.cols() != 2) {
            throw ConfigError("the quadrants rule needs a 4-class model with 2 features");
        }
        std::vector<ClassIndex> labels;
        for (Eigen::Index i = 0; i < in.features.rows(); ++i) {
            const ClassIndex q = quadrant_label(in.features(i, 0), in.features(i, 1));
            const auto& names = model.class_names();
            const auto it = std::find(names.begin(), names.end(), std::to_string(q + 1));
            if (it == names.end()) throw ConfigError("model classes are not the quadrant labels 1..4");
            labels.push_back(static_cast<ClassIndex>(it - names.begin()));
        }
        in.labels = std::move(labels);
    }
    for (auto k : top_ks) {
        if (k == 0 || k > model.class_count()) throw ConfigError("top-k values must lie in 1..n");
    }
    const auto pred = model.predict_index(in.features);
    const Eigen::MatrixXd probs = model.predict_proba(in.features, McConfig{mc_samples, seed}, threads);
    const EvaluationReport report = evaluate(*in.labels, pred, probs, top_ks);
    nlohmann::json doc = json_header("evaluate", seed);
    doc["mc_samples"] = mc_samples;
    doc["samples"] = pred.size();
    doc["classes"] = model.class_names();
    doc["report"] = to_json(report);
    doc["warnings"] = zero_support_warnings(model, *in.labels, pred);
    write_json(out_path, doc);
    std::cout << "accuracy " << format_number(report.accuracy) << "\nproba_loss " << format_number(report.proba_loss)
              << "\nlog_loss " << format_number(report.log_loss) << '\n';
    return kOk;
}

int run_calibrate(const std::string& model_path, const std::string& data_path, const std::string& label_col,
                  const std::string& positive, std::size_t bins, std::uint64_t seed, const std::string& out_path) {
    const CasimacModel model = load_model(model_path);
    if (model.class_count() != 2) {
        throw ConfigError("calibrate supports binary models only (model has " + std::to_string(model.class_count()) +
                          " classes)");
    }
    if (bins < 1) throw ConfigError("--bins must be positive");
    const auto& names = model.class_names();
    const std::string pos = positive.empty() ? names[0] : positive;
    const auto it = std::find(names.begin(), names.end(), pos);
    if (it == names.end()) throw ConfigError("positive class '" + pos + "' is not a class of the model");
    const auto k = static_cast<Eigen::Index>(it - names.begin());
    const ModelInput in = read_for_model(model, data_path, label_col, true);
    const Eigen::MatrixXd probs = model.predict_proba(in.features, McConfig{10000, seed});
    std::vector<double> p(static_cast<std::size_t>(probs.rows()));
    std::vector<int> y(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = probs(static_cast<Eigen::Index>(i), k);
        y[i] = (*in.labels)[i] == static_cast<ClassIndex>(k);
    }
    const CalibrationCurve curve = calibration_curve(y, p, bins);
    const double area = area_deviation(curve);
    double lo = 1.0, hi = 0.0;
    for (const auto& b : curve.bins) {
        lo = std::min(lo, b.mean_predicted);
        hi = std::max(hi, b.mean_predicted);
    }
    auto out = open_output(out_path);
    auto meta = csv_header("calibrate", seed);
    meta.push_back("positive_class " + pos);
    meta.push_back("area_deviation " + format_number(area));
    meta.push_back("area_extent " + format_number(lo) + " " + format_number(hi) +
                   " (integrated over the bin points only, no extrapolation to [0,1])");
    write_comments(out, meta);
    out << "bin_lower,bin_upper,mean_predicted,true_fraction,count\n";
    for (const auto& b : curve.bins) {
        out << format_number(b.lower) << ',' << format_number(b.upper) << ',' << format_number(b.mean_predicted) << ','
            << format_number(b.true_fraction) << ',' << b.count << '\n';
    }
    std::cout << "area_deviation " << format_number(area) << '\n';
    return kOk;
}

int run_tune(const std::string& data_path, const std::string& label_col, const TuningGrid& grid, const GprFlags& gf,
             std::size_t folds, std::size_t mc_samples, std::uint64_t seed, const std::string& out_path,
             const std::string& model_out) {
    const LabeledData data = load_csv(data_path, label_col);
    CvOptions opt;
    opt.folds = folds;
    opt.seed = seed;
    opt.mc_samples = mc_samples;
    opt.gpr = gf.config();
    const TuningResult result = grid_search_cv(data, grid, opt);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    nlohmann::json doc = json_header("tune", seed);
    doc["folds"] = folds;
    doc["mc_samples"] = mc_samples;
    doc["selection"] = "mean validation log-loss, ties to the earliest grid point";
    doc["result"] = to_json(result);
    doc["best_transform"] = to_json(result.best.transform());
    write_json(out_path, doc);
    if (!model_out.empty()) {
        const CasimacModel model = fit(data, result.best.transform(), GprBackend(result.best_gpr), seed);
        save_model(model, model_out);
    }
    std::cout << "best gamma " << format_number(result.best.gamma) << " nu " << format_number(result.best.nu)
              << " log_loss " << format_number(*result.scores[result.best_index].log_loss) << '\n';
    return kOk;
}

int run_viz(const std::string& model_path, const std::string& data_path, const std::string& label_col,
            bool use_transform, std::uint64_t seed, const std::string& out_path) {
    const CasimacModel model = load_model(model_path);
    const ModelInput in = read_for_model(model, data_path, label_col, use_transform);
    const SimplexGeometry& g = model.geometry();
    const auto dim = static_cast<Eigen::Index>(g.dimension());
    const auto n = static_cast<Eigen::Index>(g.class_count());
    Eigen::MatrixXd latent(in.features.rows(), dim);
    if (use_transform) {
        const FeatureMatrix x = model.preprocessing() ? model.preprocessing()->apply(in.features) : in.features;
        LatentDataset ld = transform_dataset(x, *in.labels, model.transform_config(), g);
        for (const auto& w : ld.warnings) std::cerr << "warning: " << w << '\n';
        latent = std::move(ld.latent);
    } else {
        for (Eigen::Index i = 0; i < in.features.rows(); ++i) {
            latent.row(i) = model.predict_latent_mean(in.features.row(i).transpose()).transpose();
        }
    }
    auto out = open_output(out_path);
    auto meta = csv_header("viz", seed);
    meta.push_back(use_transform ? "latent f(x) from the training transform" : "latent regression mean");
    write_comments(out, meta);
    out << "row";
    for (Eigen::Index d = 0; d < dim; ++d) out << ",z" << d;
    for (Eigen::Index d = 0; d < dim; ++d) out << ",w" << d;
    for (Eigen::Index k = 0; k < n; ++k) out << ',' << quote_csv("b_" + model.class_names()[static_cast<std::size_t>(k)]);
    out << ",true,predicted\n";
    for (Eigen::Index i = 0; i < latent.rows(); ++i) {
        const LatentPoint z = latent.row(i).transpose();
        const LatentPoint w = compress(z, g);
        const Eigen::VectorXd b = barycentric(w, g);
        out << i;
        for (Eigen::Index d = 0; d < dim; ++d) out << ',' << format_number(z(d));
        for (Eigen::Index d = 0; d < dim; ++d) out << ',' << format_number(w(d));
        for (Eigen::Index k = 0; k < n; ++k) out << ',' << format_number(b(k));
        out << ',' << (in.labels ? quote_csv(model.class_names()[(*in.labels)[static_cast<std::size_t>(i)]]) : "");
        out << ',' << quote_csv(model.class_names()[nearest_vertex_label(z, g)]) << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibrated simplex-mapping classifier"};
    app.set_version_flag("--version", CASIMAC_VERSION);
    app.require_subcommand(1);

    std::uint64_t seed = kDefaultSeed;
    std::string data, label_col = "label", out, model_path;
    std::size_t mc_samples = 10000;
    unsigned threads = 1;
    TransformFlags tf;
    GprFlags gf;
    std::function<int()> action;

    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "random seed")->capture_default_str(); };

    {
        auto* sub = app.add_subcommand("synth", "write the quadrant benchmark dataset as CSV");
        static std::size_t count = 40;
        sub->add_option("--count", count, "number of points")->capture_default_str();
        add_seed(sub);
        sub->add_option("--out", out, "output CSV")->required();
        sub->callback([&] { action = [&] { return run_synth(count, seed, out); }; });
    }
    {
        auto* sub = app.add_subcommand("train", "fit a classifier and save the model");
        static bool no_standardize = false;
        sub->add_option("--data", data, "training CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--label-col", label_col, "label column name")->capture_default_str();
        auto* g = sub->add_option("--gamma", tf.gamma, "set alpha = 1 - gamma, beta = gamma");
        sub->add_option("--alpha", tf.alpha, "attraction weight")->excludes(g);
        sub->add_option("--beta", tf.beta, "repulsion weight")->excludes(g);
        sub->add_option("--k-alpha", tf.k_alpha, "own-class neighbours")->capture_default_str();
        sub->add_option("--k-beta", tf.k_beta, "foreign-class neighbours")->capture_default_str();
        sub->add_option("--metric", tf.metric, "euclidean | taxicab | plugin:NAME")->capture_default_str();
        add_gpr_flags(sub, gf, true);
        sub->add_flag("--no-standardize", no_standardize, "skip z-score preprocessing");
        add_seed(sub);
        sub->add_option("--out", out, "model file")->required();
        sub->callback([&] { action = [&] { return run_train(data, label_col, tf, gf, no_standardize, seed, out); }; });
    }
    {
        auto* sub = app.add_subcommand("predict", "predict labels and class probabilities");
        static bool proba = false;
        sub->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        sub->add_option("--data", data, "feature CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--label-col", label_col, "label column to ignore if present")->capture_default_str();
        sub->add_flag("--proba", proba, "write class probability columns");
        sub->add_option("--mc-samples", mc_samples, "Monte Carlo samples for n > 2")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (results do not depend on it)")->capture_default_str();
        add_seed(sub);
        sub->add_option("--out", out, "output CSV")->required();
        sub->callback([&] {
            action = [&] { return run_predict(model_path, data, label_col, proba, mc_samples, seed, threads, out); };
        });
    }
    {
        auto* sub = app.add_subcommand("evaluate", "score a model on labelled data");
        static std::string rule;
        static std::vector<std::size_t> top_ks;
        sub->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        sub->add_option("--data", data, "labelled CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--label-col", label_col, "label column name")->capture_default_str();
        sub->add_option("--truth-rule", rule, "derive labels from a rule instead (quadrants)");
        sub->add_option("--top-k", top_ks, "top-k accuracies to report")->delimiter(',');
        sub->add_option("--mc-samples", mc_samples, "Monte Carlo samples for n > 2")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (results do not depend on it)")->capture_default_str();
        add_seed(sub);
        sub->add_option("--out", out, "report JSON")->required();
        sub->callback([&] {
            action = [&] {
                return run_evaluate(model_path, data, label_col, rule, mc_samples, seed, threads, top_ks, out);
            };
        });
    }
    {
        auto* sub = app.add_subcommand("calibrate", "calibration curve and area deviation of a binary model");
        static std::string positive;
        static std::size_t bins = 10;
        sub->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        sub->add_option("--data", data, "labelled CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--label-col", label_col, "label column name")->capture_default_str();
        sub->add_option("--positive", positive, "positive class (default: first class)");
        sub->add_option("--bins", bins, "equal-width bins on [0,1]")->capture_default_str();
        add_seed(sub);
        sub->add_option("--out", out, "bins CSV")->required();
        sub->callback([&] {
            action = [&] { return run_calibrate(model_path, data, label_col, positive, bins, seed, out); };
        });
    }
    {
        auto* sub = app.add_subcommand("tune", "grid search with stratified k-fold cross-validation");
        static TuningGrid grid;
        static std::size_t folds = 5;
        static std::string model_out;
        sub->add_option("--data", data, "training CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--label-col", label_col, "label column name")->capture_default_str();
        sub->add_option("--gammas", grid.gammas, "gamma values")->delimiter(',')->capture_default_str();
        sub->add_option("--k-alphas", grid.k_alphas, "k_alpha values")->delimiter(',')->capture_default_str();
        sub->add_option("--k-betas", grid.k_betas, "k_beta values")->delimiter(',')->capture_default_str();
        sub->add_option("--metrics", grid.metrics, "semimetric names")->delimiter(',')->capture_default_str();
        sub->add_option("--nus", grid.nus, "Matern smoothness values")->delimiter(',')->capture_default_str();
        sub->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
        sub->add_option("--mc-samples", mc_samples, "Monte Carlo samples for n > 2")->capture_default_str();
        add_gpr_flags(sub, gf, false);
        add_seed(sub);
        sub->add_option("--out", out, "result JSON")->required();
        sub->add_option("--model-out", model_out, "also fit the best configuration and save it");
        sub->callback([&] {
            action = [&] { return run_tune(data, label_col, grid, gf, folds, mc_samples, seed, out, model_out); };
        });
    }
    {
        auto* sub = app.add_subcommand("viz", "latent, compressed and barycentric coordinates per point");
        static bool use_transform = false;
        sub->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        sub->add_option("--data", data, "feature CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--label-col", label_col, "label column name")->capture_default_str();
        sub->add_flag("--use-transform", use_transform, "use the training transform f(x) instead of the regression mean");
        add_seed(sub);
        sub->add_option("--out", out, "output CSV")->required();
        sub->callback([&] { action = [&] { return run_viz(model_path, data, label_col, use_transform, seed, out); }; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        return action();
    } catch (const ConfigError& e) {
        std::cerr << "casimac " << stage << ": configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericalError& e) {
        std::cerr << "casimac " << stage << ": numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const DataError& e) {
        std::cerr << "casimac " << stage << ": data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "casimac " << stage << ": " << e.what() << '\n';
        return kData;
    }
}
