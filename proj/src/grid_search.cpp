#include <cmath>
#include <limits>

#include "cogpipe/evaluation.hpp"
#include "cogpipe/pipeline.hpp"

namespace cogpipe {

HyperGrid HyperGrid::defaults() {
    HyperGrid g;
    g.C = {0.1, 1.0, 10.0, 100.0};
    g.kernels = {KernelKind::Linear, KernelKind::Rbf};
    g.gammas = {std::nullopt, 0.001, 0.01, 0.1};
    g.epsilons = {0.5, 1.0, 2.0};
    return g;
}

void HyperGrid::validate() const {
    if (C.empty() || kernels.empty()) throw InputError("hyper grid: C and kernel axes must be nonempty");
    for (double c : C) {
        if (!(c > 0.0)) throw InputError("hyper grid: C values must be positive");
    }
    const bool has_rbf = std::find(kernels.begin(), kernels.end(), KernelKind::Rbf) != kernels.end();
    if (has_rbf && gammas.empty()) throw InputError("hyper grid: rbf kernel needs gamma values");
    for (const auto& g : gammas) {
        if (g && !(*g > 0.0)) throw InputError("hyper grid: gamma values must be positive");
    }
    for (double e : epsilons) {
        if (!(e >= 0.0)) throw InputError("hyper grid: epsilon values must be nonnegative");
    }
}

std::vector<Hyperparameters> classification_cells(const HyperGrid& grid) {
    grid.validate();
    std::vector<Hyperparameters> cells;
    for (double c : grid.C) {
        for (KernelKind k : grid.kernels) {
            if (k == KernelKind::Linear) {
                cells.push_back({c, {KernelKind::Linear, std::nullopt}, 0.0});
                continue;
            }
            for (const auto& g : grid.gammas) cells.push_back({c, {KernelKind::Rbf, g}, 0.0});
        }
    }
    return cells;
}

std::vector<Hyperparameters> regression_cells(const HyperGrid& grid) {
    if (grid.epsilons.empty()) throw InputError("hyper grid: epsilon axis must be nonempty");
    std::vector<Hyperparameters> cells;
    for (const auto& base : classification_cells(grid)) {
        for (double e : grid.epsilons) {
            Hyperparameters h = base;
            h.epsilon = e;
            cells.push_back(h);
        }
    }
    return cells;
}

bool cell_precedes(const Hyperparameters& a, const Hyperparameters& b) noexcept {
    if (a.C != b.C) return a.C < b.C;
    if (a.kernel.kind != b.kernel.kind) return a.kernel.kind == KernelKind::Linear;
    if (a.kernel.kind == KernelKind::Rbf && a.kernel.gamma != b.kernel.gamma) {
        if (!a.kernel.gamma) return true;
        if (!b.kernel.gamma) return false;
        return *a.kernel.gamma < *b.kernel.gamma;
    }
    return a.epsilon < b.epsilon;
}

namespace {

// Index of the best row; `better(x, y)` says score x beats score y strictly.
template <typename Better>
std::size_t pick_best(const std::vector<CvRow>& table, Better better) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const double s = table[i].mean_score;
        const double b = table[best].mean_score;
        if (better(s, b) || (s == b && cell_precedes(table[i].hyper, table[best].hyper))) best = i;
    }
    return best;
}

FeatureTable rows_of(const FeatureTable& table, const std::vector<std::size_t>& rows) {
    return {table.schema, table.X.select_rows(rows)};
}

}  // namespace

ClassifierSearch grid_search_classifier(const FeatureTable& table,
                                        const std::vector<Diagnosis>& labels, ModelVariant variant,
                                        const BlockLayout& layout, const HyperGrid& grid,
                                        const SearchOptions& opts) {
    if (table.X.rows() != labels.size()) throw InputError("grid search: row/label count mismatch");
    const SplitPlan plan = stratified_kfold(labels, opts.folds, opts.seed);
    const auto cells = classification_cells(grid);

    std::vector<CvRow> rows(cells.size());
    std::vector<std::vector<Diagnosis>> oof(cells.size(), std::vector<Diagnosis>(labels.size()));

    parallel_for(cells.size(), opts.jobs, [&](std::size_t c) {
        CvRow& row = rows[c];
        row.hyper = cells[c];
        for (int f = 0; f < plan.k; ++f) {
            const Fold& fold = plan.folds[f];
            std::vector<Diagnosis> train_labels;
            for (std::size_t i : fold.train) train_labels.push_back(labels[i]);

            TrainOptions train_opts = opts.train;
            if (opts.fold_observer) {
                train_opts.observer = [&, f](int tier, const LabeledMatrix& m, const Scaler& s) {
                    opts.fold_observer(f, tier, m, s);
                };
            }
            const TwoTierModel model = train_two_tier(rows_of(table, fold.train), train_labels, variant,
                                                      layout, cells[c], derive_seed(opts.seed, f),
                                                      train_opts);
            std::vector<Diagnosis> truth;
            std::vector<Diagnosis> pred;
            for (std::size_t i : fold.val) {
                const Diagnosis d = classify_row(model, table.X.row(i));
                oof[c][i] = d;
                truth.push_back(labels[i]);
                pred.push_back(d);
            }
            row.fold_scores.push_back(macro_metrics(confusion_matrix(truth, pred)).macro_f1);
        }
        row.mean_score = stats::mean(row.fold_scores);
    });

    ClassifierSearch out;
    out.table = std::move(rows);
    out.best = pick_best(out.table, [](double a, double b) { return a > b; });
    out.oof_predictions = std::move(oof[out.best]);
    return out;
}

RegressorSearch grid_search_regressor(const FeatureTable& table,
                                      const std::vector<Diagnosis>& labels,
                                      const std::vector<std::optional<int>>& mmse,
                                      ModelVariant variant, const BlockLayout& layout,
                                      const HyperGrid& grid, const SearchOptions& opts) {
    if (table.X.rows() != labels.size() || mmse.size() != labels.size()) {
        throw InputError("grid search: row/label/target count mismatch");
    }
    const SplitPlan plan = stratified_kfold(labels, opts.folds, opts.seed);
    const auto cells = regression_cells(grid);

    std::vector<CvRow> rows(cells.size());
    std::vector<std::vector<std::optional<double>>> oof(cells.size(),
                                                        std::vector<std::optional<double>>(labels.size()));

    parallel_for(cells.size(), opts.jobs, [&](std::size_t c) {
        CvRow& row = rows[c];
        row.hyper = cells[c];
        for (int f = 0; f < plan.k; ++f) {
            const Fold& fold = plan.folds[f];
            std::vector<double> truth;
            std::vector<std::size_t> val_rows;
            for (std::size_t i : fold.val) {
                if (mmse[i]) {
                    val_rows.push_back(i);
                    truth.push_back(*mmse[i]);
                }
            }
            if (val_rows.empty()) continue;
            std::vector<std::optional<int>> train_targets;
            for (std::size_t i : fold.train) train_targets.push_back(mmse[i]);
            const MmseModel model = train_regressor(rows_of(table, fold.train), train_targets, variant,
                                                    layout, cells[c], derive_seed(opts.seed, f),
                                                    opts.train.solver);
            std::vector<double> pred;
            for (std::size_t i : val_rows) {
                const double p = predict_mmse_row(model, table.X.row(i));
                oof[c][i] = p;
                pred.push_back(p);
            }
            row.fold_scores.push_back(rmse(truth, pred));
        }
        if (row.fold_scores.empty()) throw InputError("grid search: no subject has an MMSE target");
        row.mean_score = stats::mean(row.fold_scores);
    });

    RegressorSearch out;
    out.table = std::move(rows);
    out.best = pick_best(out.table, [](double a, double b) { return a < b; });
    out.oof_predictions = std::move(oof[out.best]);
    return out;
}

}  // namespace cogpipe
