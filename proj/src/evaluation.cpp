#include "cogpipe/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cogpipe/common.hpp"
#include "cogpipe/csv.hpp"

namespace cogpipe {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes,
                                 std::vector<std::vector<long>> counts)
    : classes_(std::move(classes)), counts_(std::move(counts)) {
    if (counts_.size() != classes_.size()) throw Error("ConfusionMatrix: shape mismatch");
    for (const auto& row : counts_) {
        if (row.size() != classes_.size()) throw Error("ConfusionMatrix: shape mismatch");
        for (long c : row) {
            if (c < 0) throw Error("ConfusionMatrix: negative count");
        }
    }
}

ConfusionMatrix ConfusionMatrix::from_indices(const std::vector<int>& truth,
                                              const std::vector<int>& pred,
                                              std::vector<std::string> classes) {
    if (truth.size() != pred.size()) {
        throw InputError("confusion matrix: truth has " + std::to_string(truth.size()) +
                         " entries, predictions " + std::to_string(pred.size()));
    }
    if (truth.empty()) throw InputError("confusion matrix: no samples");
    const std::size_t n = classes.size();
    std::vector<std::vector<long>> counts(n, std::vector<long>(n, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || pred[i] < 0 || static_cast<std::size_t>(truth[i]) >= n ||
            static_cast<std::size_t>(pred[i]) >= n) {
            throw InputError("confusion matrix: class index out of range");
        }
        ++counts[truth[i]][pred[i]];
    }
    return ConfusionMatrix(std::move(classes), std::move(counts));
}

long ConfusionMatrix::total() const noexcept {
    long t = 0;
    for (const auto& row : counts_) t = std::accumulate(row.begin(), row.end(), t);
    return t;
}

long ConfusionMatrix::true_positives(std::size_t i) const { return counts_.at(i).at(i); }

long ConfusionMatrix::false_positives(std::size_t i) const {
    long fp = 0;
    for (std::size_t r = 0; r < counts_.size(); ++r) {
        if (r != i) fp += counts_[r].at(i);
    }
    return fp;
}

long ConfusionMatrix::false_negatives(std::size_t i) const {
    long fn = 0;
    const auto& row = counts_.at(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
        if (c != i) fn += row[c];
    }
    return fn;
}

ConfusionMatrix confusion_matrix(const std::vector<Diagnosis>& truth,
                                 const std::vector<Diagnosis>& pred) {
    std::vector<int> t;
    std::vector<int> p;
    for (Diagnosis d : truth) t.push_back(static_cast<int>(d));
    for (Diagnosis d : pred) p.push_back(static_cast<int>(d));
    std::vector<std::string> names;
    for (Diagnosis d : kAllDiagnoses) names.emplace_back(to_string(d));
    return ConfusionMatrix::from_indices(t, p, std::move(names));
}

ClassScores class_prf(const ConfusionMatrix& cm, std::size_t i) {
    if (i >= cm.num_classes()) throw InputError("class_prf: class index out of range");
    const double tp = static_cast<double>(cm.true_positives(i));
    const double fp = static_cast<double>(cm.false_positives(i));
    const double fn = static_cast<double>(cm.false_negatives(i));
    ClassScores s;
    s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double pr = s.precision + s.recall;
    s.f1 = pr > 0 ? 2.0 * s.precision * s.recall / pr : 0.0;
    return s;
}

MacroMetrics macro_metrics(const ConfusionMatrix& cm) {
    MacroMetrics m;
    m.num_classes = cm.num_classes();
    if (m.num_classes == 0) return m;
    for (std::size_t i = 0; i < m.num_classes; ++i) {
        const ClassScores s = class_prf(cm, i);
        m.per_class.push_back(s);
        m.macro_precision += s.precision;
        m.macro_recall += s.recall;
        m.macro_f1 += s.f1;
    }
    const double n = static_cast<double>(m.num_classes);
    m.macro_precision /= n;
    m.macro_recall /= n;
    m.macro_f1 /= n;
    return m;
}

double rmse(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.size() != y_hat.size()) throw InputError("rmse: length mismatch");
    if (y.empty()) throw InputError("rmse: no samples");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
    return std::sqrt(acc / static_cast<double>(y.size()));
}

RegressionResult regression_result(std::vector<double> y, std::vector<double> y_hat) {
    RegressionResult r;
    r.rmse = rmse(y, y_hat);
    r.num_samples = y.size();
    r.y = std::move(y);
    r.y_hat = std::move(y_hat);
    return r;
}

std::vector<LeaderboardEntry> challenge_scores(std::vector<LeaderboardEntry> entries) {
    if (entries.empty()) throw InputError("challenge_scores: no entries");
    double f1_sum = 0.0;
    double rmse_sum = 0.0;
    for (const auto& e : entries) {
        if (!(e.rmse > 0.0)) {
            throw InputError("challenge_scores: rmse must be positive for '" + e.participant_id + "'");
        }
        if (!(e.f1 >= 0.0)) {
            throw InputError("challenge_scores: f1 must be nonnegative for '" + e.participant_id + "'");
        }
        f1_sum += e.f1;
        rmse_sum += e.rmse;
    }
    if (!(f1_sum > 0.0)) throw InputError("challenge_scores: sum of f1 is zero");
    for (auto& e : entries) e.score = 1.0 + (e.f1 / f1_sum - e.rmse / rmse_sum);
    std::stable_sort(entries.begin(), entries.end(),
                     [](const LeaderboardEntry& a, const LeaderboardEntry& b) { return a.score > b.score; });
    return entries;
}

namespace {

double parse_real(const std::string& cell, std::size_t line, const char* column) {
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ParseError("leaderboard row " + std::to_string(line) + ": invalid " + column + " '" +
                         cell + "'");
    }
    return v;
}

}  // namespace

std::vector<LeaderboardEntry> parse_leaderboard_csv(const std::string& text) {
    const auto rows = csv::parse(text);
    if (rows.empty() || csv::join(rows.front()) != "participant_id,f1,rmse") {
        throw ParseError("leaderboard: header must be 'participant_id,f1,rmse'");
    }
    std::vector<LeaderboardEntry> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 3) {
            throw ParseError("leaderboard row " + std::to_string(r + 1) + ": expected 3 columns");
        }
        out.push_back({rows[r][0], parse_real(rows[r][1], r + 1, "f1"),
                       parse_real(rows[r][2], r + 1, "rmse"), 0.0});
    }
    return out;
}

std::string write_leaderboard_csv(const std::vector<LeaderboardEntry>& scored) {
    std::string out = "rank,participant_id,f1,rmse,score\n";
    for (std::size_t i = 0; i < scored.size(); ++i) {
        const auto& e = scored[i];
        out += csv::join({std::to_string(i + 1), e.participant_id, format_double(e.f1),
                          format_double(e.rmse), format_double(e.score)});
        out += '\n';
    }
    return out;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    csv::Row header{"truth\\pred"};
    header.insert(header.end(), cm.classes().begin(), cm.classes().end());
    std::string out = csv::join(header) + "\n";
    for (std::size_t r = 0; r < cm.num_classes(); ++r) {
        csv::Row row{cm.classes()[r]};
        for (long c : cm.counts()[r]) row.push_back(std::to_string(c));
        out += csv::join(row) + "\n";
    }
    return out;
}

std::string confusion_heatmap_svg(const ConfusionMatrix& cm) {
    const std::size_t n = cm.num_classes();
    constexpr int cell = 80;
    constexpr int margin = 100;
    const int size = margin + static_cast<int>(n) * cell + 20;
    long max_count = 1;
    for (const auto& row : cm.counts()) {
        for (long c : row) max_count = std::max(max_count, c);
    }

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\" viewBox=\"0 0 " << size << ' ' << size << "\" font-family=\"sans-serif\">\n";
    svg << "<text x=\"" << margin << "\" y=\"20\" font-size=\"14\">predicted</text>\n";
    svg << "<text x=\"10\" y=\"" << margin - 10 << "\" font-size=\"14\">truth</text>\n";
    for (std::size_t c = 0; c < n; ++c) {
        svg << "<text x=\"" << margin + static_cast<int>(c) * cell + cell / 2 << "\" y=\""
            << margin - 10 << "\" font-size=\"12\" text-anchor=\"middle\">" << cm.classes()[c]
            << "</text>\n";
    }
    for (std::size_t r = 0; r < n; ++r) {
        const int y = margin + static_cast<int>(r) * cell;
        svg << "<text x=\"" << margin - 8 << "\" y=\"" << y + cell / 2
            << "\" font-size=\"12\" text-anchor=\"end\">" << cm.classes()[r] << "</text>\n";
        for (std::size_t c = 0; c < n; ++c) {
            const int x = margin + static_cast<int>(c) * cell;
            const long v = cm.count(r, c);
            const int shade = 255 - static_cast<int>(std::lround(200.0 * v / max_count));
            svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade
                << ",255)\" stroke=\"#333\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 5
                << "\" font-size=\"16\" text-anchor=\"middle\">" << v << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

Report render_report(const std::optional<ConfusionMatrix>& cm,
                     const std::optional<RegressionResult>& regression,
                     const nlohmann::json& metadata) {
    Report rep;
    rep.json = nlohmann::json::object();
    rep.json["format_version"] = 1;
    rep.json["metadata"] = metadata;
    std::ostringstream text;

    if (cm) {
        const MacroMetrics m = macro_metrics(*cm);
        nlohmann::json cls = nlohmann::json::object();
        cls["classes"] = cm->classes();
        cls["confusion_matrix"] = cm->counts();
        cls["num_samples"] = cm->total();
        nlohmann::json per_class = nlohmann::json::array();
        for (std::size_t i = 0; i < m.num_classes; ++i) {
            per_class.push_back({{"class", cm->classes()[i]},
                                 {"precision", m.per_class[i].precision},
                                 {"recall", m.per_class[i].recall},
                                 {"f1", m.per_class[i].f1}});
        }
        cls["per_class"] = per_class;
        cls["macro_precision"] = m.macro_precision;
        cls["macro_recall"] = m.macro_recall;
        cls["macro_f1"] = m.macro_f1;
        rep.json["classification"] = cls;

        text << "Confusion matrix (rows = truth, columns = predicted)\n";
        text << "            ";
        for (const auto& c : cm->classes()) text << ' ' << std::string(10 - std::min<std::size_t>(10, c.size()), ' ') << c;
        text << '\n';
        for (std::size_t r = 0; r < cm->num_classes(); ++r) {
            const auto& name = cm->classes()[r];
            text << name << std::string(12 - std::min<std::size_t>(12, name.size()), ' ');
            for (long v : cm->counts()[r]) {
                const std::string s = std::to_string(v);
                text << ' ' << std::string(10 - std::min<std::size_t>(10, s.size()), ' ') << s;
            }
            text << '\n';
        }
        text << "\nclass         precision   recall      f1\n";
        char line[128];
        for (std::size_t i = 0; i < m.num_classes; ++i) {
            std::snprintf(line, sizeof line, "%-12s  %9.4f  %7.4f  %7.4f\n",
                          cm->classes()[i].c_str(), m.per_class[i].precision, m.per_class[i].recall,
                          m.per_class[i].f1);
            text << line;
        }
        std::snprintf(line, sizeof line, "%-12s  %9.4f  %7.4f  %7.4f\n", "macro",
                      m.macro_precision, m.macro_recall, m.macro_f1);
        text << line;
        rep.confusion_csv = confusion_csv(*cm);
        rep.heatmap_svg = confusion_heatmap_svg(*cm);
    }

    if (regression) {
        rep.json["regression"] = {{"rmse", regression->rmse},
                                  {"num_samples", regression->num_samples}};
        char line[96];
        std::snprintf(line, sizeof line, "\nMMSE RMSE: %.4f over %zu subjects\n", regression->rmse,
                      regression->num_samples);
        text << line;
    }

    if (!metadata.empty()) text << "\nmetadata: " << metadata.dump() << '\n';
    rep.summary = text.str();
    return rep;
}

}  // namespace cogpipe
