#include "cogpipe/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "cogpipe/acoustic.hpp"
#include "cogpipe/csv.hpp"
#include "cogpipe/evaluation.hpp"
#include "cogpipe/json_io.hpp"
#include "cogpipe/pipeline.hpp"
#include "cogpipe/wav.hpp"

namespace cogpipe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

spdlog::logger& log() {
    static auto logger =
        std::make_shared<spdlog::logger>("cogpipe", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    return *logger;
}

void configure_logging() {
    auto level = spdlog::level::info;
    if (const char* env = std::getenv("COGPIPE_LOG"); env && *env) {
        level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only accept that for an explicit "off".
        if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::info;
    }
    log().set_level(level);
    log().set_pattern("[cogpipe] %l: %v");
}

struct Config {
    std::string manifest;
    std::string features_dir;
    std::string emb_dir;
    std::string variant = "base";
    bool variant_given = false;
    std::uint64_t seed = 0;
    int folds = 5;
    std::string out;
    unsigned jobs = default_jobs();
    bool strict = false;

    std::string grid_c;
    std::string grid_kernels;
    std::string grid_gammas;
    std::string grid_epsilons;

    std::string models;
    std::string predictions;
    std::string leaderboard;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot open '" + p.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + p.string() + "'");
}

const std::string& require(const std::string& value, const char* flag) {
    if (value.empty()) throw InputError(std::string(flag) + " is required");
    return value;
}

fs::path existing(const std::string& value, const char* flag) {
    fs::path p = require(value, flag);
    if (!fs::exists(p)) throw InputError(std::string(flag) + " '" + value + "' does not exist");
    return p;
}

double parse_number(std::string_view text, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw InputError(std::string(what) + ": invalid number '" + std::string(text) + "'");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

HyperGrid grid_from(const Config& cfg) {
    HyperGrid grid = HyperGrid::defaults();
    if (!cfg.grid_c.empty()) {
        grid.C.clear();
        for (const auto& s : split_list(cfg.grid_c)) grid.C.push_back(parse_number(s, "--grid-c"));
    }
    if (!cfg.grid_kernels.empty()) {
        grid.kernels.clear();
        for (const auto& s : split_list(cfg.grid_kernels)) {
            if (s == "linear") grid.kernels.push_back(KernelKind::Linear);
            else if (s == "rbf") grid.kernels.push_back(KernelKind::Rbf);
            else throw InputError("--grid-kernels: unknown kernel '" + s + "'");
        }
    }
    if (!cfg.grid_gammas.empty()) {
        grid.gammas.clear();
        for (const auto& s : split_list(cfg.grid_gammas)) {
            if (s == "scale") grid.gammas.push_back(std::nullopt);
            else grid.gammas.push_back(parse_number(s, "--grid-gammas"));
        }
    }
    if (!cfg.grid_epsilons.empty()) {
        grid.epsilons.clear();
        for (const auto& s : split_list(cfg.grid_epsilons)) {
            grid.epsilons.push_back(parse_number(s, "--grid-epsilons"));
        }
    }
    grid.validate();
    return grid;
}

ModelVariant variant_from(const Config& cfg) {
    const auto v = parse_variant(cfg.variant);
    if (!v) throw InputError("--variant must be one of base, egemaps, prosody");
    return *v;
}

// ISO-8601 UTC time from SOURCE_DATE_EPOCH, or the Unix epoch when unset.
std::string build_timestamp() {
    std::int64_t epoch = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
        const std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), epoch);
        if (ec != std::errc{} || ptr != s.data() + s.size() || epoch < 0) {
            throw InputError("SOURCE_DATE_EPOCH must be a nonnegative integer");
        }
    }
    const std::time_t t = static_cast<std::time_t>(epoch);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --- extract --------------------------------------------------------------------------

int cmd_extract(const Config& cfg) {
    const Cohort cohort = load_manifest(existing(cfg.manifest, "--manifest"));
    const fs::path out_dir = !cfg.features_dir.empty() ? cfg.features_dir : require(cfg.out, "--out");

    struct Job {
        std::size_t subject;
        Task task;
        fs::path path;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        for (Task t : kAllTasks) {
            if (const auto& p = cohort[i].audio(t)) jobs.push_back({i, t, *p});
        }
    }

    std::vector<std::optional<AcousticFeatures>> results(jobs.size());
    std::vector<std::string> failures(jobs.size());
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t j) {
        try {
            results[j] = extract_acoustic_features(read_wav_file(jobs[j].path));
        } catch (const InputError& e) {
            failures[j] = e.what();
        }
    });

    std::size_t failed = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (failures[j].empty()) continue;
        ++failed;
        log().warn("{} {}: {}", cohort[jobs[j].subject].subject_id, to_string(jobs[j].task), failures[j]);
    }
    if (failed > 0 && cfg.strict) {
        throw InputError(std::to_string(failed) + " audio file(s) could not be read (--strict)");
    }

    for (Task t : kAllTasks) {
        std::vector<std::pair<std::string, FeatureVector>> egemaps;
        std::vector<std::pair<std::string, FeatureVector>> prosody;
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            if (jobs[j].task != t || !results[j]) continue;
            const auto& id = cohort[jobs[j].subject].subject_id;
            egemaps.emplace_back(id, results[j]->egemaps);
            prosody.emplace_back(id, results[j]->prosody);
        }
        write_file(acoustic_csv_path(out_dir, t, "egemaps"), write_feature_csv(egemaps_schema(), egemaps));
        write_file(acoustic_csv_path(out_dir, t, "prosody"), write_feature_csv(prosody_schema(), prosody));
        log().info("{}: {} subject(s) extracted", to_string(t), egemaps.size());
    }
    return kExitOk;
}

// --- train ----------------------------------------------------------------------------

json cv_rows_json(const std::vector<CvRow>& rows, bool regression) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"cell", hyperparameters_to_json(r.hyper, regression)},
                       {"fold_scores", r.fold_scores},
                       {"mean_score", r.mean_score}});
    }
    return out;
}

int cmd_train(const Config& cfg) {
    const Cohort cohort = load_manifest(existing(cfg.manifest, "--manifest"));
    const fs::path features_dir = existing(cfg.features_dir, "--features-dir");
    const fs::path emb_dir = existing(cfg.emb_dir, "--emb-dir");
    const fs::path out_dir = require(cfg.out, "--out");
    const ModelVariant variant = variant_from(cfg);
    const HyperGrid grid = grid_from(cfg);
    const std::string timestamp = build_timestamp();

    const StagedFeatures staged = load_staged_features(cohort, features_dir, emb_dir, variant);
    const FeatureTable table = build_feature_table(staged.subjects, variant, staged.layout);
    const std::vector<Diagnosis> labels = cohort.diagnoses();
    std::vector<std::optional<int>> mmse;
    for (const auto& r : cohort.records()) mmse.push_back(r.mmse);
    log().info("{} subjects, {} features, variant {}", cohort.size(), table.schema.size(), to_string(variant));

    SearchOptions so;
    so.folds = cfg.folds;
    so.seed = cfg.seed;
    so.jobs = cfg.jobs;
    const ClassifierSearch cs = grid_search_classifier(table, labels, variant, staged.layout, grid, so);
    const RegressorSearch rs = grid_search_regressor(table, labels, mmse, variant, staged.layout, grid, so);
    const Hyperparameters& best_clf = cs.table[cs.best].hyper;
    const Hyperparameters& best_reg = rs.table[rs.best].hyper;
    log().info("best classifier cell: {} (macro-F1 {:.4f})",
               hyperparameters_to_json(best_clf, false).dump(), cs.table[cs.best].mean_score);
    log().info("best regressor cell: {} (RMSE {:.4f})",
               hyperparameters_to_json(best_reg, true).dump(), rs.table[rs.best].mean_score);

    TwoTierModel clf = train_two_tier(table, labels, variant, staged.layout, best_clf, cfg.seed);
    clf.training.timestamp = timestamp;
    MmseModel reg = train_regressor(table, mmse, variant, staged.layout, best_reg, cfg.seed);
    reg.training.timestamp = timestamp;

    json cv = {{"variant", to_string(variant)},
               {"seed", cfg.seed},
               {"folds", cfg.folds},
               {"classification",
                {{"metric", "macro_f1"}, {"best", cs.best}, {"rows", cv_rows_json(cs.table, false)}}},
               {"regression", {{"metric", "rmse"}, {"best", rs.best}, {"rows", cv_rows_json(rs.table, true)}}}};

    std::vector<double> y;
    std::vector<double> y_hat;
    for (std::size_t i = 0; i < mmse.size(); ++i) {
        if (mmse[i] && rs.oof_predictions[i]) {
            y.push_back(*mmse[i]);
            y_hat.push_back(*rs.oof_predictions[i]);
        }
    }
    const json meta = {{"command", "train"},
                       {"evaluation", "out-of-fold"},
                       {"variant", to_string(variant)},
                       {"seed", cfg.seed},
                       {"folds", cfg.folds},
                       {"num_subjects", cohort.size()},
                       {"num_features", table.schema.size()},
                       {"classifier_cell", hyperparameters_to_json(best_clf, false)},
                       {"regressor_cell", hyperparameters_to_json(best_reg, true)},
                       {"timestamp", timestamp}};
    const Report report = render_report(confusion_matrix(labels, cs.oof_predictions),
                                        regression_result(std::move(y), std::move(y_hat)), meta);

    write_file(out_dir / "classifier.json", save_model(clf));
    write_file(out_dir / "regressor.json", save_model(reg));
    write_file(out_dir / "cv_table.json", dump_json(cv));
    write_file(out_dir / "report.json", report.json_text());
    std::cout << report.summary;
    return kExitOk;
}

// --- predict --------------------------------------------------------------------------

int cmd_predict(const Config& cfg) {
    const Cohort cohort = load_manifest(existing(cfg.manifest, "--manifest"));
    const fs::path models = existing(cfg.models, "--models");
    const fs::path features_dir = existing(cfg.features_dir, "--features-dir");
    const fs::path emb_dir = existing(cfg.emb_dir, "--emb-dir");
    const fs::path out_dir = require(cfg.out, "--out");

    const TwoTierModel clf = load_two_tier_model(slurp(models / "classifier.json"));
    std::optional<MmseModel> reg;
    if (fs::exists(models / "regressor.json")) {
        reg = load_mmse_model(slurp(models / "regressor.json"));
        if (reg->schema_hash != clf.schema_hash) {
            throw SchemaMismatch("model/feature mismatch: classifier and regressor schemas differ");
        }
    } else {
        log().warn("no regressor.json under '{}'; mmse_pred left empty", models.string());
    }
    if (cfg.variant_given && variant_from(cfg) != clf.variant) {
        throw InputError("--variant " + cfg.variant + " differs from the model's variant " +
                         std::string(to_string(clf.variant)));
    }

    FeatureTable table;
    try {
        const StagedFeatures staged =
            load_staged_features(cohort, features_dir, emb_dir, clf.variant, clf.layout);
        table = build_feature_table(staged.subjects, clf.variant, clf.layout);
    } catch (const SchemaMismatch& e) {
        throw SchemaMismatch(std::string("model/feature mismatch: ") + e.what());
    }

    std::string out = "subject_id,diagnosis,mmse_pred\n";
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto row = table.X.row(i);
        const FeatureVector fv{table.schema, std::vector<double>(row.begin(), row.end())};
        csv::Row line{cohort[i].subject_id, std::string(to_string(classify(clf, fv)))};
        line.push_back(reg ? format_double(predict_mmse(*reg, fv)) : std::string());
        out += csv::join(line) + "\n";
    }
    write_file(out_dir / "predictions.csv", out);
    log().info("wrote {} prediction(s)", cohort.size());
    return kExitOk;
}

// --- evaluate -------------------------------------------------------------------------

struct PredictionRow {
    std::string subject_id;
    Diagnosis diagnosis;
    std::optional<double> mmse;
};

std::vector<PredictionRow> parse_predictions(const std::string& text) {
    const auto rows = csv::parse(text);
    if (rows.empty() || rows[0] != csv::Row{"subject_id", "diagnosis", "mmse_pred"}) {
        throw ParseError("predictions csv: header must be subject_id,diagnosis,mmse_pred");
    }
    std::vector<PredictionRow> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "predictions csv row " + std::to_string(r + 1);
        if (row.size() != 3) throw ParseError(where + ": expected 3 columns");
        const auto d = parse_diagnosis(row[1]);
        if (!d) throw ParseError(where + ": unknown diagnosis '" + row[1] + "'");
        PredictionRow p{row[0], *d, std::nullopt};
        if (!row[2].empty()) p.mmse = parse_number(row[2], where.c_str());
        out.push_back(std::move(p));
    }
    return out;
}

void write_report(const fs::path& out_dir, const Report& report) {
    write_file(out_dir / "report.json", report.json_text());
    write_file(out_dir / "summary.txt", report.summary);
    if (!report.confusion_csv.empty()) write_file(out_dir / "confusion.csv", report.confusion_csv);
    if (!report.heatmap_svg.empty()) write_file(out_dir / "confusion.svg", report.heatmap_svg);
}

int cmd_evaluate(const Config& cfg) {
    const Cohort cohort = load_manifest(existing(cfg.manifest, "--manifest"));
    const auto preds = parse_predictions(slurp(existing(cfg.predictions, "--predictions")));
    const fs::path out_dir = require(cfg.out, "--out");

    if (preds.size() != cohort.size()) {
        throw InputError("evaluate: length mismatch (" + std::to_string(preds.size()) +
                         " predictions for " + std::to_string(cohort.size()) + " subjects)");
    }
    std::map<std::string, const PredictionRow*> by_id;
    for (const auto& p : preds) {
        if (!by_id.emplace(p.subject_id, &p).second) {
            throw InputError("evaluate: duplicate prediction for '" + p.subject_id + "'");
        }
    }

    std::vector<Diagnosis> truth;
    std::vector<Diagnosis> pred;
    std::vector<double> y;
    std::vector<double> y_hat;
    for (const auto& rec : cohort.records()) {
        const auto it = by_id.find(rec.subject_id);
        if (it == by_id.end()) throw InputError("evaluate: no prediction for '" + rec.subject_id + "'");
        truth.push_back(rec.diagnosis);
        pred.push_back(it->second->diagnosis);
        if (rec.mmse && it->second->mmse) {
            y.push_back(*rec.mmse);
            y_hat.push_back(*it->second->mmse);
        }
    }
    std::optional<RegressionResult> regression;
    if (!y.empty()) regression = regression_result(std::move(y), std::move(y_hat));

    const json meta = {{"command", "evaluate"}, {"num_subjects", cohort.size()}};
    const Report report = render_report(confusion_matrix(truth, pred), regression, meta);
    write_report(out_dir, report);
    std::cout << report.summary;
    return kExitOk;
}

// --- score-leaderboard ----------------------------------------------------------------

int cmd_score(const Config& cfg) {
    const auto entries = parse_leaderboard_csv(slurp(existing(cfg.leaderboard, "--leaderboard")));
    const std::string scored = write_leaderboard_csv(challenge_scores(entries));
    if (cfg.out.empty()) {
        std::cout << scored;
    } else {
        write_file(fs::path(cfg.out) / "leaderboard_scored.csv", scored);
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    configure_logging();
    Config cfg;
    CLI::App app{"Cognitive-decline screening pipeline", args.empty() ? "cogpipe" : args[0]};
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--manifest", cfg.manifest, "Cohort manifest CSV");
    app.add_option("--features-dir", cfg.features_dir, "Staged acoustic feature directory");
    app.add_option("--emb-dir", cfg.emb_dir, "Staged embedding directory");
    auto* variant_opt = app.add_option("--variant", cfg.variant, "Feature variant")
                            ->check(CLI::IsMember({"base", "egemaps", "prosody"}));
    app.add_option("--seed", cfg.seed, "Random seed");
    app.add_option("--folds", cfg.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
    app.add_option("--out", cfg.out, "Output directory");
    app.add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
    app.add_flag("--strict", cfg.strict, "Fail on unreadable audio");

    auto* extract = app.add_subcommand("extract", "Extract acoustic feature CSVs from audio");
    auto* train = app.add_subcommand("train", "Grid-search and train classifier and regressor");
    train->add_option("--grid-c", cfg.grid_c, "Comma-separated C values");
    train->add_option("--grid-kernels", cfg.grid_kernels, "Comma-separated kernels (linear,rbf)");
    train->add_option("--grid-gammas", cfg.grid_gammas, "Comma-separated rbf gammas ('scale' allowed)");
    train->add_option("--grid-epsilons", cfg.grid_epsilons, "Comma-separated SVR epsilons");
    auto* predict = app.add_subcommand("predict", "Predict diagnosis and MMSE");
    predict->add_option("--models", cfg.models, "Directory holding classifier.json and regressor.json");
    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against the manifest");
    evaluate->add_option("--predictions", cfg.predictions, "Predictions CSV");
    auto* score = app.add_subcommand("score-leaderboard", "Compute combined challenge scores");
    score->add_option("--leaderboard", cfg.leaderboard, "Leaderboard CSV (participant_id,f1,rmse)");

    try {
        std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
        std::reverse(reversed.begin(), reversed.end());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }
    cfg.variant_given = variant_opt->count() > 0;

    try {
        if (*extract) return cmd_extract(cfg);
        if (*train) return cmd_train(cfg);
        if (*predict) return cmd_predict(cfg);
        if (*evaluate) return cmd_evaluate(cfg);
        if (*score) return cmd_score(cfg);
    } catch (const InputError& e) {
        log().error("{}", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        log().error("internal error: {}", e.what());
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace cogpipe::cli
