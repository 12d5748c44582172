#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogpipe/dataset.hpp"
#include "cogpipe/json_io.hpp"

namespace cogpipe {

// Rows are truth, columns are predictions.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    ConfusionMatrix(std::vector<std::string> classes, std::vector<std::vector<long>> counts);

    // Counts over integer class indices in [0, n_classes).
    static ConfusionMatrix from_indices(const std::vector<int>& truth, const std::vector<int>& pred,
                                        std::vector<std::string> classes);

    std::size_t num_classes() const noexcept { return classes_.size(); }
    const std::vector<std::string>& classes() const noexcept { return classes_; }
    long count(std::size_t truth, std::size_t pred) const { return counts_.at(truth).at(pred); }
    const std::vector<std::vector<long>>& counts() const noexcept { return counts_; }
    long total() const noexcept;

    long true_positives(std::size_t i) const;
    long false_positives(std::size_t i) const;
    long false_negatives(std::size_t i) const;

private:
    std::vector<std::string> classes_;
    std::vector<std::vector<long>> counts_;
};

// Class order is always HC, MCI, Dementia.
ConfusionMatrix confusion_matrix(const std::vector<Diagnosis>& truth,
                                 const std::vector<Diagnosis>& pred);

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Zero denominators yield 0 for the affected metric.
ClassScores class_prf(const ConfusionMatrix& cm, std::size_t class_index);

struct MacroMetrics {
    std::vector<ClassScores> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::size_t num_classes = 0;
};

MacroMetrics macro_metrics(const ConfusionMatrix& cm);

struct RegressionResult {
    std::vector<double> y;
    std::vector<double> y_hat;
    double rmse = 0.0;
    std::size_t num_samples = 0;
};

double rmse(const std::vector<double>& y, const std::vector<double>& y_hat);
RegressionResult regression_result(std::vector<double> y, std::vector<double> y_hat);

struct LeaderboardEntry {
    std::string participant_id;
    double f1 = 0.0;
    double rmse = 0.0;
    double score = 0.0;
};

// S_k = f1_k / sum(f1) + 1 - rmse_k / sum(rmse), sorted by descending score
// (ties keep input order).
std::vector<LeaderboardEntry> challenge_scores(std::vector<LeaderboardEntry> entries);

std::vector<LeaderboardEntry> parse_leaderboard_csv(const std::string& text);
std::string write_leaderboard_csv(const std::vector<LeaderboardEntry>& scored);

struct Report {
    nlohmann::json json;  // canonical document
    std::string summary;  // human-readable text
    std::string confusion_csv;
    std::string heatmap_svg;

    std::string json_text() const { return dump_json(json); }
};

// Any of the inputs may be absent. `metadata` is copied under the "metadata" key.
Report render_report(const std::optional<ConfusionMatrix>& cm,
                     const std::optional<RegressionResult>& regression,
                     const nlohmann::json& metadata = nlohmann::json::object());

std::string confusion_csv(const ConfusionMatrix& cm);
std::string confusion_heatmap_svg(const ConfusionMatrix& cm);

}  // namespace cogpipe
