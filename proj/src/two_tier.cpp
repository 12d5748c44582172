#include <algorithm>

#include "cogpipe/pipeline.hpp"

namespace cogpipe {

Diagnosis combine_decisions(bool tier1_dementia, bool tier2_impaired) noexcept {
    if (tier1_dementia) return Diagnosis::Dementia;
    return tier2_impaired ? Diagnosis::MCI : Diagnosis::HC;
}

Diagnosis diagnosis_from_decisions(double tier1_value, double tier2_value) noexcept {
    return combine_decisions(tier1_value >= 0.0, tier2_value >= 0.0);
}

namespace {

void require_all_classes(const std::vector<Diagnosis>& labels) {
    std::array<std::size_t, 3> counts{};
    for (Diagnosis d : labels) ++counts[static_cast<int>(d)];
    for (Diagnosis d : kAllDiagnoses) {
        if (counts[static_cast<int>(d)] == 0) {
            throw InputError("two-tier training: class " + std::string(to_string(d)) +
                             " missing from training data");
        }
    }
}

SvcModel train_tier(int tier, const Matrix& X, const std::vector<Diagnosis>& labels,
                    BinaryScheme scheme, const Hyperparameters& hyper, std::uint64_t seed,
                    const TrainOptions& opts) {
    Scaler scaler = fit_scaler(X);
    LabeledMatrix data{apply_scaler(scaler, X), binarize_labels(labels, scheme)};
    const LabeledMatrix balanced =
        balance_binary(data, derive_seed(seed, 100 + static_cast<std::uint64_t>(tier)), opts.smote_neighbors);
    if (opts.observer) opts.observer(tier, balanced, scaler);
    SolverOptions solver = opts.solver;
    solver.seed = derive_seed(seed, 200 + static_cast<std::uint64_t>(tier));
    return train_svc_scaled(balanced.X, balanced.y, hyper.C, hyper.kernel, solver, std::move(scaler));
}

}  // namespace

TwoTierModel train_two_tier(const FeatureTable& table, const std::vector<Diagnosis>& labels,
                            ModelVariant variant, const BlockLayout& layout,
                            const Hyperparameters& hyper, std::uint64_t seed,
                            const TrainOptions& opts) {
    if (table.X.rows() != labels.size()) throw InputError("train_two_tier: row/label count mismatch");
    if (table.X.cols() != table.schema.size()) throw InputError("train_two_tier: schema width mismatch");
    require_all_classes(labels);

    TwoTierModel m;
    m.variant = variant;
    m.layout = layout;
    m.schema = table.schema;
    m.schema_hash = schema_hash(table.schema);
    m.tier1 = train_tier(1, table.X, labels, BinaryScheme::DementiaVsRest, hyper, seed, opts);
    m.tier2 = train_tier(2, table.X, labels, BinaryScheme::HCVsImpaired, hyper, seed, opts);
    m.training.seed = seed;
    m.training.hyper = hyper;
    return m;
}

TierDecisions tier_decisions(const TwoTierModel& model, std::span<const double> x) {
    return {decision_value(model.tier1, x), decision_value(model.tier2, x)};
}

Diagnosis classify_row(const TwoTierModel& model, std::span<const double> x) {
    const TierDecisions d = tier_decisions(model, x);
    return diagnosis_from_decisions(d.tier1, d.tier2);
}

Diagnosis classify(const TwoTierModel& model, const FeatureVector& fv) {
    if (fv.names.size() != fv.values.size() || schema_hash(fv.names) != model.schema_hash) {
        throw SchemaMismatch("model/feature mismatch: feature schema differs from the model's");
    }
    return classify_row(model, fv.values);
}

MmseModel train_regressor(const FeatureTable& table, const std::vector<std::optional<int>>& mmse,
                          ModelVariant variant, const BlockLayout& layout,
                          const Hyperparameters& hyper, std::uint64_t seed,
                          const SolverOptions& solver) {
    if (table.X.rows() != mmse.size()) throw InputError("train_regressor: row/target count mismatch");
    std::vector<std::size_t> rows;
    std::vector<double> targets;
    for (std::size_t i = 0; i < mmse.size(); ++i) {
        if (mmse[i]) {
            rows.push_back(i);
            targets.push_back(*mmse[i]);
        }
    }
    if (rows.size() < 2) {
        throw InputError("train_regressor: need at least 2 subjects with MMSE, have " +
                         std::to_string(rows.size()));
    }
    const Matrix X = table.X.select_rows(rows);
    Scaler scaler = fit_scaler(X);
    SolverOptions opts = solver;
    opts.seed = derive_seed(seed, 300);

    const Matrix Z = apply_scaler(scaler, X);
    MmseModel m;
    m.svr = train_svr_scaled(Z, targets, hyper.C, hyper.epsilon, hyper.kernel,
                             opts, std::move(scaler));
    m.variant = variant;
    m.layout = layout;
    m.schema = table.schema;
    m.schema_hash = schema_hash(table.schema);
    m.training.seed = seed;
    m.training.hyper = hyper;
    return m;
}

double clamp_mmse(double raw) noexcept { return std::clamp(raw, kMmseMin, kMmseMax); }

double predict_mmse_row(const MmseModel& model, std::span<const double> x) {
    return clamp_mmse(predict_svr(model.svr, x));
}

double predict_mmse(const MmseModel& model, const FeatureVector& fv) {
    if (fv.names.size() != fv.values.size() || schema_hash(fv.names) != model.schema_hash) {
        throw SchemaMismatch("model/feature mismatch: feature schema differs from the model's");
    }
    return predict_mmse_row(model, fv.values);
}

}  // namespace cogpipe
