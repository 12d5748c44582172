#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "cogpipe/common.hpp"
#include "cogpipe/evaluation.hpp"

using namespace cogpipe;

namespace {

const std::vector<std::string> kNames{"HC", "MCI", "Dementia"};

ConfusionMatrix example_cm() { return ConfusionMatrix(kNames, {{5, 1, 0}, {2, 2, 1}, {0, 1, 3}}); }

// One-vs-rest scores straight from label lists.
ClassScores brute_scores(const std::vector<int>& truth, const std::vector<int>& pred, int c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == c;
        const bool p = pred[i] == c;
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
    }
    ClassScores s;
    s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

std::vector<std::string> names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("c" + std::to_string(i));
    return out;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("worked confusion example") {
    const ConfusionMatrix cm = example_cm();
    CHECK(cm.total() == 15);
    const ClassScores hc = class_prf(cm, 0);
    CHECK(hc.precision == doctest::Approx(5.0 / 7.0));
    CHECK(hc.recall == doctest::Approx(5.0 / 6.0));
    CHECK(hc.f1 == doctest::Approx(10.0 / 13.0));
    CHECK(hc.precision == doctest::Approx(0.7143).epsilon(1e-4));
    CHECK(hc.recall == doctest::Approx(0.8333).epsilon(1e-4));
    CHECK(hc.f1 == doctest::Approx(0.7692).epsilon(1e-4));
    const MacroMetrics m = macro_metrics(cm);
    CHECK(m.per_class[1].f1 == doctest::Approx(4.0 / 9.0));
    CHECK(m.per_class[2].f1 == doctest::Approx(0.75));
    CHECK(m.macro_f1 == doctest::Approx((10.0 / 13.0 + 4.0 / 9.0 + 0.75) / 3.0));
    CHECK(std::abs(m.macro_f1 - 0.6546) < 5e-5);
}

TEST_CASE("rmse example") {
    CHECK(rmse({28, 24, 18}, {27, 26, 21}) == doctest::Approx(std::sqrt(14.0 / 3.0)));
    CHECK(rmse({28, 24, 18}, {29, 22, 18}) == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(rmse({1, 2, 3}, {0, 0, 3}) == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(rmse({0, 0, 0}, {1, 2, 2 * std::sqrt(2.0)}) == doctest::Approx(std::sqrt(13.0 / 3.0)));
    CHECK(std::abs(rmse({0, 0, 0}, {1, 2, 2 * std::sqrt(2.0)}) - 2.0817) < 5e-5);
    CHECK(rmse({3, 4}, {3, 4}) == 0.0);
    CHECK_THROWS_AS(rmse({1, 2}, {1}), InputError);
    CHECK_THROWS_AS(rmse({}, {}), InputError);
}

TEST_CASE("degenerate true/false positive combinations") {
    // Binary matrices [[tp, fn], [fp, tn]] scored for class 0.
    struct Case {
        long tp, fn, fp;
        double p, r, f;
    };
    const std::vector<Case> cases{
        {0, 0, 0, 0, 0, 0}, {1, 0, 0, 1, 1, 1},     {0, 1, 0, 0, 0, 0},         {0, 0, 1, 0, 0, 0},
        {1, 1, 0, 1, 0.5, 2.0 / 3}, {1, 0, 1, 0.5, 1, 2.0 / 3}, {0, 1, 1, 0, 0, 0}, {1, 1, 1, 0.5, 0.5, 0.5},
    };
    for (const auto& c : cases) {
        const ConfusionMatrix cm({"a", "b"}, {{c.tp, c.fn}, {c.fp, 3}});
        const ClassScores s = class_prf(cm, 0);
        CHECK(s.precision == doctest::Approx(c.p));
        CHECK(s.recall == doctest::Approx(c.r));
        CHECK(s.f1 == doctest::Approx(c.f));
        CHECK(std::isfinite(s.f1));
    }
}

TEST_CASE("macro scores match one-vs-rest brute force") {
    SplitMix64 g(19);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + g.below(4);
        const std::size_t n = 1 + g.below(60);
        std::vector<int> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<int>(g.below(k));
            pred[i] = g.below(3) == 0 ? truth[i] : static_cast<int>(g.below(k));
        }
        const auto cm = ConfusionMatrix::from_indices(truth, pred, names(k));
        const MacroMetrics m = macro_metrics(cm);
        REQUIRE(m.num_classes == k);
        double macro = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const ClassScores b = brute_scores(truth, pred, static_cast<int>(c));
            CHECK(m.per_class[c].precision == doctest::Approx(b.precision).epsilon(1e-12));
            CHECK(m.per_class[c].recall == doctest::Approx(b.recall).epsilon(1e-12));
            CHECK(m.per_class[c].f1 == doctest::Approx(b.f1).epsilon(1e-12));
            CHECK(m.per_class[c].f1 >= 0.0);
            CHECK(m.per_class[c].f1 <= 1.0);
            macro += b.f1;
        }
        CHECK(m.macro_f1 == doctest::Approx(macro / k).epsilon(1e-12));
        CHECK(m.macro_f1 >= 0.0);
        CHECK(m.macro_f1 <= 1.0);
    }
}

TEST_CASE("macro F1 is invariant to sample order") {
    SplitMix64 g(2);
    std::vector<int> truth(40), pred(40);
    for (std::size_t i = 0; i < 40; ++i) {
        truth[i] = static_cast<int>(g.below(3));
        pred[i] = static_cast<int>(g.below(3));
    }
    const double base = macro_metrics(ConfusionMatrix::from_indices(truth, pred, names(3))).macro_f1;
    for (int t = 0; t < 10; ++t) {
        for (std::size_t i = truth.size(); i > 1; --i) {
            const std::size_t j = g.below(i);
            std::swap(truth[i - 1], truth[j]);
            std::swap(pred[i - 1], pred[j]);
        }
        CHECK(macro_metrics(ConfusionMatrix::from_indices(truth, pred, names(3))).macro_f1 == base);
    }
}

TEST_CASE("perfect predictions and class relabeling") {
    const std::vector<int> y{0, 1, 2, 2, 1, 0, 0};
    CHECK(macro_metrics(ConfusionMatrix::from_indices(y, y, names(3))).macro_f1 == 1.0);
    // relabeling classes consistently permutes the per-class scores only
    const std::vector<int> p{0, 2, 2, 1, 1, 0, 1};
    const std::vector<int> perm{2, 0, 1};
    std::vector<int> y2, p2;
    for (int v : y) y2.push_back(perm[v]);
    for (int v : p) p2.push_back(perm[v]);
    const double a = macro_metrics(ConfusionMatrix::from_indices(y, p, names(3))).macro_f1;
    const double b = macro_metrics(ConfusionMatrix::from_indices(y2, p2, names(3))).macro_f1;
    CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("confusion matrix from diagnoses") {
    using D = Diagnosis;
    const auto cm = confusion_matrix({D::HC, D::MCI, D::Dementia, D::HC}, {D::HC, D::HC, D::Dementia, D::MCI});
    CHECK(cm.classes() == kNames);
    CHECK(cm.count(0, 0) == 1);
    CHECK(cm.count(0, 1) == 1);
    CHECK(cm.count(1, 0) == 1);
    CHECK(cm.count(2, 2) == 1);
    CHECK(cm.true_positives(0) == 1);
    CHECK(cm.false_positives(0) == 1);
    CHECK(cm.false_negatives(0) == 1);
    CHECK_THROWS_AS(confusion_matrix({D::HC}, {}), InputError);
    CHECK_THROWS_AS(confusion_matrix({}, {}), InputError);
}

TEST_CASE("challenge score of identical entries") {
    const auto out = challenge_scores({{"a", 0.7, 3.0, 0}, {"b", 0.7, 3.0, 0}, {"c", 0.7, 3.0, 0}});
    for (const auto& e : out) CHECK(e.score == doctest::Approx(1.0));
    CHECK(out[0].participant_id == "a");
    CHECK(out[2].participant_id == "c");
}

TEST_CASE("challenge score of two entries") {
    const auto out = challenge_scores({{"x", 0.4, 3.0, 0}, {"y", 0.6, 2.0, 0}});
    REQUIRE(out.size() == 2);
    CHECK(out[0].participant_id == "y");
    CHECK(out[0].score == doctest::Approx(1.2));
    CHECK(out[1].score == doctest::Approx(0.8));
    double sum = 0;
    for (const auto& e : out) sum += e.score;
    CHECK(sum == doctest::Approx(2.0));
}

TEST_CASE("challenge score monotonicity and scale invariance") {
    SplitMix64 g(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + g.below(8);
        std::vector<LeaderboardEntry> e;
        for (std::size_t i = 0; i < n; ++i) e.push_back({"p" + std::to_string(i), 0.05 + g.uniform(), 0.5 + 5 * g.uniform(), 0});
        auto score_of = [](const std::vector<LeaderboardEntry>& scored, const std::string& id) {
            return std::find_if(scored.begin(), scored.end(), [&](auto& x) { return x.participant_id == id; })->score;
        };
        const auto base = challenge_scores(e);
        double total = 0;
        for (const auto& x : base) total += x.score;
        CHECK(total == doctest::Approx(static_cast<double>(n)));

        // raising one entry's f1 raises its score; lowering its rmse raises it too
        auto better = e;
        better[0].f1 += 0.1;
        CHECK(score_of(challenge_scores(better), "p0") > score_of(base, "p0"));
        better = e;
        better[0].rmse *= 0.8;
        CHECK(score_of(challenge_scores(better), "p0") > score_of(base, "p0"));

        // multiplying every f1 or every rmse by a constant leaves scores unchanged
        auto scaled = e;
        for (auto& x : scaled) {
            x.f1 *= 3.5;
            x.rmse *= 0.25;
        }
        const auto s2 = challenge_scores(scaled);
        for (const auto& x : base) CHECK(score_of(s2, x.participant_id) == doctest::Approx(x.score).epsilon(1e-12));
        for (std::size_t i = 1; i < base.size(); ++i) CHECK(base[i - 1].score >= base[i].score);
    }
}

TEST_CASE("challenge score errors") {
    CHECK_THROWS_AS(challenge_scores({}), InputError);
    CHECK_THROWS_AS(challenge_scores({{"a", 0.5, 0.0, 0}}), InputError);
    CHECK_THROWS_AS(challenge_scores({{"a", 0.0, 1.0, 0}, {"b", 0.0, 2.0, 0}}), InputError);
    CHECK_THROWS_AS(challenge_scores({{"a", -0.1, 1.0, 0}, {"b", 0.5, 2.0, 0}}), InputError);
}

TEST_CASE("leaderboard csv") {
    const auto entries = parse_leaderboard_csv("participant_id,f1,rmse\nx,0.4,3\ny,0.6,2\n");
    REQUIRE(entries.size() == 2);
    CHECK(entries[1].participant_id == "y");
    CHECK(entries[1].rmse == 2.0);
    const std::string out = write_leaderboard_csv(challenge_scores(entries));
    CHECK(out == "rank,participant_id,f1,rmse,score\n1,y,0.6,2,1.2\n2,x,0.4,3,0.8\n");
    CHECK_THROWS_AS(parse_leaderboard_csv("id,f1,rmse\nx,1,1\n"), ParseError);
    CHECK_THROWS_WITH_AS(parse_leaderboard_csv("participant_id,f1,rmse\nx,abc,1\n"),
                         doctest::Contains("row 2"), ParseError);
    CHECK_THROWS_AS(parse_leaderboard_csv("participant_id,f1,rmse\nx,1\n"), ParseError);
}

TEST_CASE("report document") {
    const ConfusionMatrix cm = example_cm();
    const RegressionResult rr = regression_result({28, 24, 18}, {27, 26, 21});
    const nlohmann::json meta{{"variant", "base"}, {"seed", 42}};
    const Report a = render_report(cm, rr, meta);
    const Report b = render_report(cm, rr, meta);
    CHECK(a.json_text() == b.json_text());
    CHECK(a.summary == b.summary);
    const auto doc = nlohmann::json::parse(a.json_text());
    CHECK(doc["format_version"] == 1);
    CHECK(doc["classification"]["macro_f1"].get<double>() == doctest::Approx(macro_metrics(cm).macro_f1));
    CHECK(doc["classification"]["confusion_matrix"][1][2] == 1);
    CHECK(doc["classification"]["classes"][2] == "Dementia");
    CHECK(doc["classification"]["per_class"].size() == 3);
    CHECK(doc["regression"]["rmse"].get<double>() == doctest::Approx(std::sqrt(14.0 / 3.0)));
    CHECK(doc["regression"]["num_samples"] == 3);
    CHECK(doc["metadata"]["seed"] == 42);
    CHECK(a.json_text().back() == '\n');
    CHECK(a.summary.find("macro") != std::string::npos);

    const Report cls_only = render_report(cm, std::nullopt);
    CHECK_FALSE(nlohmann::json::parse(cls_only.json_text()).contains("regression"));
    const Report reg_only = render_report(std::nullopt, rr);
    CHECK_FALSE(nlohmann::json::parse(reg_only.json_text()).contains("classification"));
    CHECK(reg_only.heatmap_svg.empty());
}

TEST_CASE("heatmap and confusion csv") {
    const ConfusionMatrix cm = example_cm();
    const std::string svg = confusion_heatmap_svg(cm);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count_of(svg, "<rect class=\"cell\"") == 9);
    const ConfusionMatrix two({"a", "b"}, {{1, 0}, {0, 1}});
    CHECK(count_of(confusion_heatmap_svg(two), "<rect class=\"cell\"") == 4);
    CHECK(confusion_csv(cm) == "truth\\pred,HC,MCI,Dementia\nHC,5,1,0\nMCI,2,2,1\nDementia,0,1,3\n");
}
