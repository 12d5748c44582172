#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogpipe/acoustic.hpp"
#include "cogpipe/common.hpp"
#include "cogpipe/dataset.hpp"
#include "cogpipe/embeddings.hpp"
#include "cogpipe/feature_vector.hpp"
#include "cogpipe/parallel.hpp"
#include "cogpipe/resampling.hpp"
#include "cogpipe/svm.hpp"

namespace cogpipe {

// ---------------------------------------------------------------------------------------
// Feature fusion

enum class ModelVariant { Base, BasePlusEgemaps, BasePlusProsody };

std::string_view to_string(ModelVariant v) noexcept;  // "base", "egemaps", "prosody"
std::optional<ModelVariant> parse_variant(std::string_view text) noexcept;

inline constexpr std::string_view kSpeechSource = "whisper-encoder";
inline constexpr std::string_view kTextSource = "roberta";

// Feature blocks available for one task of one subject. Absent blocks are zero-filled.
struct TaskFeatures {
    std::optional<FeatureVector> speech;   // pooled mean+std of the speech encoder sequence
    std::optional<FeatureVector> text;     // sentence embedding (mean half only)
    std::optional<FeatureVector> egemaps;
    std::optional<FeatureVector> prosody;

    bool any() const noexcept { return speech || text || egemaps || prosody; }
};

using SubjectFeatures = std::array<TaskFeatures, 3>;  // indexed by Task

// Embedding widths; fixed per trained model.
struct BlockLayout {
    std::uint32_t speech_dim = 0;
    std::uint32_t text_dim = 0;

    friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

// Task order SFT, PFT, CTD; within a task: speech pool, text, [egemaps], [prosody];
// then one presence flag per task.
std::vector<std::string> fused_schema(ModelVariant variant, const BlockLayout& layout);

// Throws InputError when no task has any block, or a block has the wrong width.
FeatureVector assemble_subject_vector(const SubjectFeatures& features, ModelVariant variant,
                                      const BlockLayout& layout);

struct FeatureTable {
    std::vector<std::string> schema;
    Matrix X;  // one row per cohort record
};

FeatureTable build_feature_table(const std::vector<SubjectFeatures>& subjects,
                                 ModelVariant variant, const BlockLayout& layout);

// On-disk staging layout:
//   <features_dir>/<task>/egemaps.csv, <features_dir>/<task>/prosody.csv  (task = sft|pft|ctd)
//   <emb_dir>/<subject>_<TASK>.speech.embseq, <emb_dir>/<subject>_<TASK>.text.embseq
std::filesystem::path acoustic_csv_path(const std::filesystem::path& features_dir, Task task,
                                        std::string_view family);
std::filesystem::path embedding_path(const std::filesystem::path& emb_dir,
                                     std::string_view subject_id, Task task, std::string_view role);

// Feature CSV: subject_id, then one column per schema name.
std::string write_feature_csv(const std::vector<std::string>& schema,
                              const std::vector<std::pair<std::string, FeatureVector>>& rows);
// subject_id -> features; the header must equal `expected_schema`.
std::vector<std::pair<std::string, FeatureVector>> parse_feature_csv(
    const std::string& text, const std::vector<std::string>& expected_schema);

struct StagedFeatures {
    std::vector<SubjectFeatures> subjects;  // parallel to the cohort records
    BlockLayout layout;                     // widths observed on disk
};

// Loads every block the variant needs. Missing files leave the block absent. When
// `layout` is given, observed widths must match it.
StagedFeatures load_staged_features(const Cohort& cohort, const std::filesystem::path& features_dir,
                                    const std::filesystem::path& emb_dir, ModelVariant variant,
                                    const std::optional<BlockLayout>& layout = std::nullopt);

// ---------------------------------------------------------------------------------------
// Models

struct Hyperparameters {
    double C = 1.0;
    KernelSpec kernel;
    double epsilon = 1.0;  // regression only

    friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct TrainingMetadata {
    std::uint64_t seed = 0;
    Hyperparameters hyper;
    std::string timestamp;
};

struct TwoTierModel {
    SvcModel tier1;  // Dementia vs rest
    SvcModel tier2;  // impaired vs HC
    ModelVariant variant = ModelVariant::Base;
    BlockLayout layout;
    std::vector<std::string> schema;
    std::uint64_t schema_hash = 0;
    TrainingMetadata training;
};

inline constexpr double kMmseMin = 0.0;
inline constexpr double kMmseMax = 30.0;

struct MmseModel {
    SvrModel svr;
    ModelVariant variant = ModelVariant::Base;
    BlockLayout layout;
    std::vector<std::string> schema;
    std::uint64_t schema_hash = 0;
    TrainingMetadata training;
};

// Called with the final (scaled, SMOTE-balanced) training set of each tier.
using TierObserver = std::function<void(int tier, const LabeledMatrix& balanced, const Scaler& scaler)>;

struct TrainOptions {
    SolverOptions solver;
    int smote_neighbors = kDefaultSmoteNeighbors;
    TierObserver observer;
};

// Tier-1 dementia overrides tier-2; otherwise tier-2 separates MCI from HC.
Diagnosis combine_decisions(bool tier1_dementia, bool tier2_impaired) noexcept;
// Signs of the two tier decision values, with f = 0 counted as positive.
Diagnosis diagnosis_from_decisions(double tier1_value, double tier2_value) noexcept;

// Both tiers are trained on every row: fit scaler -> SMOTE balance -> SVC.
// Throws InputError when any of the three classes is missing.
TwoTierModel train_two_tier(const FeatureTable& table, const std::vector<Diagnosis>& labels,
                            ModelVariant variant, const BlockLayout& layout,
                            const Hyperparameters& hyper, std::uint64_t seed,
                            const TrainOptions& opts = {});

struct TierDecisions {
    double tier1 = 0.0;
    double tier2 = 0.0;
};

TierDecisions tier_decisions(const TwoTierModel& model, std::span<const double> x);
Diagnosis classify_row(const TwoTierModel& model, std::span<const double> x);
// Throws SchemaMismatch when the vector's schema differs from the model's.
Diagnosis classify(const TwoTierModel& model, const FeatureVector& fv);

// Trains on the rows with a target; throws InputError with fewer than two.
MmseModel train_regressor(const FeatureTable& table, const std::vector<std::optional<int>>& mmse,
                          ModelVariant variant, const BlockLayout& layout,
                          const Hyperparameters& hyper, std::uint64_t seed,
                          const SolverOptions& solver = {});

double clamp_mmse(double raw) noexcept;
double predict_mmse_row(const MmseModel& model, std::span<const double> x);
double predict_mmse(const MmseModel& model, const FeatureVector& fv);

// ---------------------------------------------------------------------------------------
// Grid search

struct HyperGrid {
    std::vector<double> C;
    std::vector<KernelKind> kernels;
    std::vector<std::optional<double>> gammas;  // nullopt = "scale"
    std::vector<double> epsilons;

    static HyperGrid defaults();
    void validate() const;
};

std::vector<Hyperparameters> classification_cells(const HyperGrid& grid);
std::vector<Hyperparameters> regression_cells(const HyperGrid& grid);

// Tie-break precedence: smaller C, linear before rbf, smaller gamma ("scale" first),
// then smaller epsilon.
bool cell_precedes(const Hyperparameters& a, const Hyperparameters& b) noexcept;

struct CvRow {
    Hyperparameters hyper;
    std::vector<double> fold_scores;  // Macro-F1 or RMSE per fold
    double mean_score = 0.0;
};

struct ClassifierSearch {
    std::vector<CvRow> table;
    std::size_t best = 0;
    std::vector<Diagnosis> oof_predictions;  // out-of-fold predictions of the best cell
};

struct RegressorSearch {
    std::vector<CvRow> table;
    std::size_t best = 0;
    std::vector<std::optional<double>> oof_predictions;
};

struct SearchOptions {
    int folds = 5;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    TrainOptions train;
    // Called as (fold, tier, balanced training set, scaler) for every classification fit.
    std::function<void(int fold, int tier, const LabeledMatrix&, const Scaler&)> fold_observer;
};

ClassifierSearch grid_search_classifier(const FeatureTable& table,
                                        const std::vector<Diagnosis>& labels, ModelVariant variant,
                                        const BlockLayout& layout, const HyperGrid& grid,
                                        const SearchOptions& opts);

RegressorSearch grid_search_regressor(const FeatureTable& table,
                                      const std::vector<Diagnosis>& labels,
                                      const std::vector<std::optional<int>>& mmse,
                                      ModelVariant variant, const BlockLayout& layout,
                                      const HyperGrid& grid, const SearchOptions& opts);

// ---------------------------------------------------------------------------------------
// Persistence (JSON, format_version 1)

inline constexpr int kModelFormatVersion = 1;

std::string save_model(const TwoTierModel& model);
std::string save_model(const MmseModel& model);
// Throw ParseError / FormatError (e.g. "version mismatch") / SchemaMismatch ("schema mismatch").
TwoTierModel load_two_tier_model(const std::string& text);
MmseModel load_mmse_model(const std::string& text);

nlohmann::json hyperparameters_to_json(const Hyperparameters& h, bool with_epsilon);

}  // namespace cogpipe
