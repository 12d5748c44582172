#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cogpipe/acoustic.hpp"
#include "support/signals.hpp"

using namespace cogpipe;
using namespace testsupport;

namespace {

std::vector<double> voiced_f0(const PitchTrack& t) {
    std::vector<double> out;
    for (std::size_t i = 0; i < t.f0_hz.size(); ++i) {
        if (t.voiced[i]) out.push_back(t.f0_hz[i]);
    }
    return out;
}

double median(std::vector<double> v) { return stats::percentile(std::move(v), 0.5); }

// An LldSeries with `n` frames, 10 ms hop, every track filled with `fill`.
LldSeries flat_series(std::size_t n, double fill, bool voiced) {
    LldSeries s;
    s.f0_hz.assign(n, voiced ? fill : 0.0);
    s.voiced.assign(n, voiced ? 1 : 0);
    for (auto* track : {&s.rms_energy, &s.jitter_local, &s.shimmer_local, &s.spectral_centroid_hz,
                        &s.spectral_slope_0_1k, &s.zero_crossing_rate}) {
        track->assign(n, fill);
    }
    s.frame_hop_s = 0.01;
    s.frame_len_s = 0.025;
    s.duration_s = 0.01 * static_cast<double>(n - 1) + 0.025;
    return s;
}

std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<double> pause_durations(const PauseTrack& p) {
    std::vector<double> out;
    for (const auto& s : p.pauses) out.push_back(s.duration_s);
    return out;
}

}  // namespace

TEST_CASE("f0 of pure sines") {
    for (double hz : {110.0, 220.0, 330.0}) {
        CAPTURE(hz);
        const PitchTrack t = estimate_f0(wave(sine(hz, 1.0)));
        const auto f0 = voiced_f0(t);
        REQUIRE(f0.size() > 0.9 * static_cast<double>(t.f0_hz.size()));
        for (double f : f0) CHECK(std::abs(f - hz) <= 5.0);
    }
}

TEST_CASE("f0 frame count and unvoiced convention") {
    const PitchTrack t = estimate_f0(wave(concat({sine(200, 0.3), silence(0.3)})));
    // 25 ms frames every 10 ms over 9600 samples
    CHECK(t.f0_hz.size() == 1 + (9600 - 400) / 160);
    CHECK(t.frame_hop_s == doctest::Approx(0.01));
    for (std::size_t i = 0; i < t.f0_hz.size(); ++i) {
        if (!t.voiced[i]) CHECK(t.f0_hz[i] == 0.0);
        else CHECK((t.f0_hz[i] >= 55.0 && t.f0_hz[i] <= 500.0));
    }
}

TEST_CASE("quiet noise under the silence floor is unvoiced") {
    const PitchTrack t = estimate_f0(wave(white_noise(1.0, 5e-5, 3)));
    CHECK(std::none_of(t.voiced.begin(), t.voiced.end(), [](auto v) { return v != 0; }));
}

TEST_CASE("loud white noise is mostly unvoiced") {
    const PitchTrack t = estimate_f0(wave(white_noise(1.0, 0.5, 4)));
    const auto n = std::count_if(t.voiced.begin(), t.voiced.end(), [](auto v) { return v != 0; });
    CHECK(n < static_cast<long>(t.voiced.size() / 10));
}

TEST_CASE("pitch tracker preconditions") {
    CHECK_THROWS_AS(estimate_f0(wave(sine(200, 0.01))), InputError);
    AcousticConfig bad;
    bad.f_min_hz = 600;
    CHECK_THROWS_AS(estimate_f0(wave(sine(200, 0.5)), bad), InputError);
    AcousticConfig nyquist;
    nyquist.f_max_hz = 9000;
    CHECK_THROWS_AS(estimate_f0(wave(sine(200, 0.5)), nyquist), InputError);
}

TEST_CASE("silence floor rule") {
    AcousticConfig cfg;
    CHECK(silence_floor(wave(silence(0.1)), cfg) == 1e-4);
    const auto w = wave(sine(100, 1.0, 0.5));
    CHECK(silence_floor(w, cfg) == doctest::Approx(0.02 * 0.5 / std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("jitter and shimmer of a pure sine are small") {
    const LldSeries l = compute_llds(wave(sine(220, 1.0)));
    std::vector<double> jit, shim;
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (l.voiced[i]) {
            jit.push_back(l.jitter_local[i]);
            shim.push_back(l.shimmer_local[i]);
        }
    }
    REQUIRE(!jit.empty());
    CHECK(stats::mean(jit) < 0.005);
    CHECK(stats::mean(shim) < 0.01);
}

TEST_CASE("period perturbation raises jitter") {
    auto mean_jitter = [](const Waveform& w) {
        const LldSeries l = compute_llds(w);
        std::vector<double> v;
        for (std::size_t i = 0; i < l.size(); ++i) {
            if (l.voiced[i]) v.push_back(l.jitter_local[i]);
        }
        return stats::mean(v);
    };
    const double pure = mean_jitter(wave(sine(220, 1.0)));
    const double perturbed = mean_jitter(wave(jittered_sine(220, 1.0, 0.03, 17)));
    CHECK(perturbed > pure);
    CHECK(perturbed > 0.005);
}

TEST_CASE("spectral tracks of a sine") {
    const LldSeries l = compute_llds(wave(sine(1000, 0.5, 0.5)));
    const std::size_t mid = l.size() / 2;
    CHECK(l.spectral_centroid_hz[mid] == doctest::Approx(1000).epsilon(0.05));
    CHECK(l.zero_crossing_rate[mid] == doctest::Approx(2000.0 / 16000).epsilon(0.05));
    CHECK(l.rms_energy[mid] == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(0.01));
    const LldSeries low = compute_llds(wave(sine(150, 0.5, 0.5)));
    CHECK(low.spectral_slope_0_1k[low.size() / 2] < 0.0);
}

TEST_CASE("all tracks have one entry per frame") {
    const LldSeries l = compute_llds(wave(concat({sine(180, 0.4), silence(0.2), sine(90, 0.4)})));
    const std::size_t n = l.size();
    CHECK(l.voiced.size() == n);
    CHECK(l.rms_energy.size() == n);
    CHECK(l.jitter_local.size() == n);
    CHECK(l.shimmer_local.size() == n);
    CHECK(l.spectral_centroid_hz.size() == n);
    CHECK(l.spectral_slope_0_1k.size() == n);
    CHECK(l.zero_crossing_rate.size() == n);
    CHECK(l.duration_s == doctest::Approx(1.0));
}

TEST_CASE("one internal silence is one pause") {
    const LldSeries l = compute_llds(wave(concat({sine(200, 0.5), silence(1.0), sine(200, 0.5)})));
    const PauseTrack p = detect_pauses(l, 200);
    REQUIRE(p.pauses.size() == 1);
    CHECK(std::abs(p.pauses[0].duration_s - 1.0) <= 0.02);
    CHECK(std::abs(p.pauses[0].start_s - 0.5) <= 0.02);
    CHECK(p.voiced_segments.size() == 2);
}

TEST_CASE("continuous tone has no pause") {
    const LldSeries l = compute_llds(wave(sine(200, 2.0)));
    CHECK(detect_pauses(l, 200).pauses.empty());
}

TEST_CASE("two internal 0.3 s silences are two pauses") {
    const auto w = wave(concat({sine(150, 0.4), silence(0.3), sine(150, 0.4), silence(0.3), sine(150, 0.4)}));
    const PauseTrack p = detect_pauses(compute_llds(w), 200);
    REQUIRE(p.pauses.size() == 2);
    for (const auto& s : p.pauses) CHECK(std::abs(s.duration_s - 0.3) <= 0.02);
    CHECK(p.pauses[0].end_s() <= p.pauses[1].start_s);
}

TEST_CASE("short gaps and edge silence are not pauses") {
    const auto w = wave(concat({silence(0.5), sine(150, 0.4), silence(0.1), sine(150, 0.4), silence(0.5)}));
    const LldSeries l = compute_llds(w);
    CHECK(detect_pauses(l, 200).pauses.empty());
    // the same 0.1 s gap counts when the threshold is lowered
    CHECK(detect_pauses(l, 50).pauses.size() == 1);
}

TEST_CASE("pause segments are sorted and disjoint") {
    const auto w = wave(concat({sine(150, 0.3), silence(0.25), sine(250, 0.2), silence(0.4), sine(120, 0.3),
                                silence(0.22), sine(150, 0.3)}));
    const PauseTrack p = detect_pauses(compute_llds(w), 200);
    CHECK(p.pauses.size() == 3);
    for (const auto* list : {&p.pauses, &p.voiced_segments}) {
        for (std::size_t i = 0; i < list->size(); ++i) {
            CHECK((*list)[i].duration_s > 0.0);
            if (i > 0) CHECK((*list)[i - 1].end_s() <= (*list)[i].start_s + 1e-12);
        }
    }
}

TEST_CASE("time reversal preserves pause durations") {
    // (n - 400) divisible by the 160-sample hop keeps the frame grid symmetric
    auto w = concat({sine(170, 0.41), silence(0.33), sine(130, 0.27), silence(0.52), sine(210, 0.3)});
    w.resize(400 + 160 * ((w.size() - 400) / 160));
    std::vector<double> rev(w.rbegin(), w.rend());
    const auto a = pause_durations(detect_pauses(compute_llds(wave(w)), 200));
    const auto b = pause_durations(detect_pauses(compute_llds(wave(rev)), 200));
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == a.size());
    const auto sa = sorted(a), sb = sorted(b);
    for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i] == doctest::Approx(sb[i]).epsilon(1e-12));
}

TEST_CASE("amplitude scaling leaves pitch, jitter and pauses unchanged") {
    const auto base = wave(concat({jittered_sine(180, 0.5, 0.02, 5), silence(0.4), jittered_sine(140, 0.5, 0.02, 6)}));
    const LldSeries ref = compute_llds(base);
    const auto ref_p = prosody_features(ref, detect_pauses(ref, 200));
    for (double c : {1.0, 0.5, 0.1}) {
        CAPTURE(c);
        const LldSeries l = compute_llds(scaled(base, c));
        REQUIRE(l.size() == ref.size());
        for (std::size_t i = 0; i < l.size(); ++i) {
            CHECK(l.voiced[i] == ref.voiced[i]);
            CHECK(l.f0_hz[i] == doctest::Approx(ref.f0_hz[i]).epsilon(1e-6));
            CHECK(l.jitter_local[i] == doctest::Approx(ref.jitter_local[i]).epsilon(1e-6));
            CHECK(l.shimmer_local[i] == doctest::Approx(ref.shimmer_local[i]).epsilon(1e-6));
            CHECK(l.rms_energy[i] == doctest::Approx(c * ref.rms_energy[i]).epsilon(1e-6));
        }
        const auto p = prosody_features(l, detect_pauses(l, 200));
        for (std::size_t k = 0; k < p.size(); ++k) CHECK(p.values[k] == doctest::Approx(ref_p.values[k]).epsilon(1e-6));
    }
}

TEST_CASE("egemaps schema is fixed") {
    const auto& s = egemaps_schema();
    REQUIRE(s.size() == 33);
    CHECK(s.front() == "egemaps.f0.mean");
    CHECK(s[1] == "egemaps.f0.std");
    CHECK(s[2] == "egemaps.f0.p20");
    CHECK(s[3] == "egemaps.f0.p80");
    CHECK(s.back() == "egemaps.voiced_frame_count");
    CHECK(s == egemaps_schema());
    const auto fv = egemaps_functionals(compute_llds(wave(sine(200, 0.3))));
    CHECK(fv.names == s);
    fv.validate();
}

TEST_CASE("constant track functionals") {
    const LldSeries l = flat_series(50, 200.0, true);
    const FeatureVector fv = egemaps_functionals(l);
    for (const char* track : {"f0", "rms_energy", "jitter", "shimmer", "spectral_centroid", "spectral_slope", "zcr"}) {
        const std::string p = std::string("egemaps.") + track + ".";
        CHECK(fv.at(p + "mean") == doctest::Approx(200.0));
        CHECK(fv.at(p + "std") == 0.0);
        CHECK(fv.at(p + "p20") == doctest::Approx(200.0));
        CHECK(fv.at(p + "p80") == doctest::Approx(200.0));
    }
    CHECK(fv.at("egemaps.voiced.mean") == 1.0);
    CHECK(fv.at("egemaps.voiced_frame_count") == 50);
}

TEST_CASE("two-point f0 track") {
    LldSeries l = flat_series(4, 0.0, false);
    l.voiced = {1, 0, 1, 0};
    l.f0_hz = {100.0, 0.0, 300.0, 0.0};
    const FeatureVector fv = egemaps_functionals(l);
    CHECK(fv.at("egemaps.f0.mean") == doctest::Approx(200.0));
    CHECK(fv.at("egemaps.f0.std") == doctest::Approx(100.0));
    CHECK(fv.at("egemaps.f0.p20") == doctest::Approx(140.0));
    CHECK(fv.at("egemaps.f0.p80") == doctest::Approx(260.0));
    CHECK(fv.at("egemaps.voiced.mean") == doctest::Approx(0.5));
    CHECK(fv.at("egemaps.voiced_frame_count") == 2);
}

TEST_CASE("all-silence input has zero voiced functionals") {
    const FeatureVector fv = egemaps_functionals(compute_llds(wave(silence(1.0))));
    CHECK(fv.at("egemaps.voiced_frame_count") == 0.0);
    for (const char* track : {"f0", "jitter", "shimmer"}) {
        for (const char* fn : {"mean", "std", "p20", "p80"}) {
            CHECK(fv.at(std::string("egemaps.") + track + "." + fn) == 0.0);
        }
    }
    for (double v : fv.values) CHECK(std::isfinite(v));
}

TEST_CASE("prosody on a constructed pause track") {
    LldSeries l = flat_series(200, 0.0, true);
    l.duration_s = 2.0;
    PauseTrack p;
    p.voiced_segments = {{0.0, 0.5}, {1.5, 0.5}};
    p.pauses = {{0.5, 1.0}};
    const FeatureVector fv = prosody_features(l, p);
    CHECK(fv.at("prosody.pause_count") == 1);
    CHECK(fv.at("prosody.pause_rate_per_min") == doctest::Approx(30.0));
    CHECK(fv.at("prosody.pause_duration_max") == doctest::Approx(1.0));
    CHECK(fv.at("prosody.post_pause_voiced_mean") == doctest::Approx(0.5));
    CHECK(fv.at("prosody.speech_time_s") == doctest::Approx(1.0));
    CHECK(fv.at("prosody.articulation_epochs") == 2);
}

TEST_CASE("prosody pause statistics") {
    LldSeries l = flat_series(300, 0.0, true);
    l.duration_s = 3.0;
    PauseTrack p;
    p.pauses = {{0.5, 0.3}, {1.5, 0.5}};
    const FeatureVector fv = prosody_features(l, p);
    CHECK(fv.at("prosody.pause_duration_mean") == doctest::Approx(0.4));
    CHECK(fv.at("prosody.pause_duration_max") == doctest::Approx(0.5));
    CHECK(fv.at("prosody.pause_duration_std") == doctest::Approx(0.1));
}

TEST_CASE("fully voiced audio") {
    const LldSeries l = compute_llds(wave(sine(200, 1.0)));
    const FeatureVector fv = prosody_features(l, detect_pauses(l, 200));
    CHECK(fv.at("prosody.voiced_ratio") == 1.0);
    CHECK(fv.at("prosody.pause_count") == 0.0);
    CHECK(fv.at("prosody.pause_duration_mean") == 0.0);
    CHECK(fv.at("prosody.articulation_epochs") == 1);
    CHECK(prosody_schema().size() == 12);
    CHECK(fv.names == prosody_schema());
}

TEST_CASE("prosody from a real recording") {
    const auto w = wave(concat({sine(160, 0.5), silence(1.0), sine(160, 0.5)}));
    const auto feats = extract_acoustic_features(w);
    CHECK(feats.prosody.at("prosody.pause_count") == 1);
    CHECK(feats.prosody.at("prosody.pause_rate_per_min") == doctest::Approx(30.0).epsilon(0.01));
    CHECK(std::abs(feats.prosody.at("prosody.pause_duration_mean") - 1.0) <= 0.02);
    CHECK(feats.egemaps.at("egemaps.f0.mean") == doctest::Approx(160).epsilon(0.02));
}

TEST_CASE("percentiles interpolate linearly between ranks") {
    CHECK(stats::percentile({1, 2, 3, 4}, 0.2) == doctest::Approx(1.6));
    CHECK(stats::percentile({4, 3, 2, 1}, 0.8) == doctest::Approx(3.4));
    CHECK(stats::percentile({7}, 0.3) == 7);
    CHECK(stats::percentile({}, 0.5) == 0.0);
    CHECK(stats::population_std({1, 3}) == 1.0);
    CHECK(stats::mean({}) == 0.0);
}

TEST_CASE("pitch is robust to a different sample rate") {
    const auto w = wave(sine(200, 0.5, 0.5, 44100), 44100);
    const auto f0 = voiced_f0(estimate_f0(w));
    REQUIRE(!f0.empty());
    CHECK(median(f0) == doctest::Approx(200).epsilon(0.02));
}
