#include "cogpipe/acoustic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include "cogpipe/common.hpp"

namespace cogpipe {

namespace stats {

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace stats

namespace {

struct FrameGrid {
    std::size_t length = 0;  // samples per frame
    std::size_t hop = 0;
    std::size_t count = 0;
};

FrameGrid make_grid(const Waveform& wave, const AcousticConfig& cfg) {
    if (wave.sample_rate <= 0) throw InputError("waveform: sample rate must be positive");
    if (wave.samples.empty()) throw InputError("waveform: no samples");
    FrameGrid g;
    g.length = static_cast<std::size_t>(std::lround(cfg.frame_ms * wave.sample_rate / 1000.0));
    g.hop = static_cast<std::size_t>(std::lround(cfg.hop_ms * wave.sample_rate / 1000.0));
    if (g.length < 4 || g.hop == 0) throw InputError("acoustic: frame or hop too short");
    if (g.length > wave.samples.size()) {
        throw InputError("acoustic: frame longer than signal");
    }
    g.count = 1 + (wave.samples.size() - g.length) / g.hop;
    return g;
}

double frame_rms(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

struct PitchEstimate {
    double f0 = 0.0;
    double strength = 0.0;
};

// Searches lags in [min_lag, max_lag] for the smallest-lag local maximum of the
// normalized cross-correlation whose value is within 5% of the best local maximum.
PitchEstimate pitch_of_frame(std::span<const double> raw, double fs, std::size_t min_lag,
                             std::size_t max_lag, std::vector<double>& buf,
                             std::vector<double>& r) {
    const std::size_t n = raw.size();
    buf.assign(raw.begin(), raw.end());
    const double dc = std::accumulate(buf.begin(), buf.end(), 0.0) / static_cast<double>(n);
    for (double& v : buf) v -= dc;

    // Prefix sums of squares give the energy of both overlap windows in O(1).
    std::vector<double> sq(n + 1, 0.0);
    for (std::size_t t = 0; t < n; ++t) sq[t + 1] = sq[t] + buf[t] * buf[t];

    const std::size_t lo = min_lag - 1;
    const std::size_t hi = max_lag + 1;
    r.assign(hi + 1, 0.0);
    for (std::size_t lag = lo; lag <= hi; ++lag) {
        double num = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) num += buf[t] * buf[t + lag];
        const double e0 = sq[n - lag];
        const double e1 = sq[n] - sq[lag];
        const double den = std::sqrt(e0 * e1);
        r[lag] = den > 0.0 ? num / den : 0.0;
    }

    double best = -1.0;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
        if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]) best = std::max(best, r[lag]);
    }
    if (best <= 0.0) return {};

    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
        if (!(r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]) || r[lag] < 0.95 * best) continue;
        const double a = r[lag - 1];
        const double b = r[lag];
        const double c = r[lag + 1];
        const double denom = a - 2.0 * b + c;
        const double delta = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
        const double refined = static_cast<double>(lag) + std::clamp(delta, -0.5, 0.5);
        return {fs / refined, b};
    }
    return {};
}

struct CycleMeasures {
    double jitter = 0.0;
    double shimmer = 0.0;
};

// Cycle-to-cycle perturbation over one voiced run spanning samples [begin, end).
// Peaks are tracked one period at a time using the local frame's f0, then refined
// to sub-sample position and amplitude by parabolic interpolation.
CycleMeasures cycle_perturbation(std::span<const double> x, std::size_t begin, std::size_t end,
                                 const std::vector<double>& f0, std::size_t first_frame,
                                 std::size_t last_frame, const FrameGrid& grid, double fs) {
    auto period_at = [&](std::size_t pos) {
        std::size_t frame = pos >= grid.length / 2 ? (pos - grid.length / 2) / grid.hop : 0;
        frame = std::clamp(frame, first_frame, last_frame);
        return fs / f0[frame];
    };
    auto argmax = [&](std::size_t a, std::size_t b) {
        std::size_t best = a;
        for (std::size_t i = a; i < b; ++i) {
            if (x[i] > x[best]) best = i;
        }
        return best;
    };

    std::vector<double> times;
    std::vector<double> amps;
    auto record = [&](std::size_t p) {
        double t = static_cast<double>(p);
        double amp = x[p];
        if (p > 0 && p + 1 < x.size()) {
            const double a = x[p - 1];
            const double b = x[p];
            const double c = x[p + 1];
            const double denom = a - 2.0 * b + c;
            if (denom < 0.0) {
                const double d = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
                t += d;
                amp = b - 0.25 * (a - c) * d;
            }
        }
        times.push_back(t);
        amps.push_back(amp);
    };

    const auto first_period = static_cast<std::size_t>(std::ceil(period_at(begin)));
    if (begin + first_period >= end) return {};
    std::size_t p = argmax(begin, begin + first_period);
    record(p);
    for (;;) {
        const double period = period_at(p);
        const auto a = p + static_cast<std::size_t>(std::ceil(0.75 * period));
        const auto b = p + static_cast<std::size_t>(std::floor(1.25 * period)) + 1;
        if (b > end) break;
        p = argmax(a, b);
        record(p);
    }
    if (times.size() < 3) return {};

    std::vector<double> periods;
    for (std::size_t i = 1; i < times.size(); ++i) periods.push_back(times[i] - times[i - 1]);
    double dp = 0.0;
    for (std::size_t i = 1; i < periods.size(); ++i) dp += std::abs(periods[i] - periods[i - 1]);
    dp /= static_cast<double>(periods.size() - 1);
    double da = 0.0;
    for (std::size_t i = 1; i < amps.size(); ++i) da += std::abs(amps[i] - amps[i - 1]);
    da /= static_cast<double>(amps.size() - 1);

    CycleMeasures m;
    const double mean_period = stats::mean(periods);
    const double mean_amp = stats::mean(amps);
    m.jitter = mean_period > 0.0 ? dp / mean_period : 0.0;
    m.shimmer = mean_amp > 0.0 ? da / mean_amp : 0.0;
    return m;
}

// FFTW plans are created and destroyed under a global lock; execution is thread-safe.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::span<double> input() { return {in_, n_}; }

    // Magnitudes of bins 0..n/2.
    void magnitude(std::vector<double>& mag) {
        fftw_execute(plan_);
        mag.resize(n_ / 2 + 1);
        for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(out_[k][0], out_[k][1]);
    }

private:
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Least-squares slope of dB magnitude against frequency over bins up to 1 kHz.
double spectral_slope(const std::vector<double>& mag, double bin_hz) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < mag.size() && static_cast<double>(k) * bin_hz <= 1000.0; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        const double db = 20.0 * std::log10(mag[k] + 1e-12);
        sx += f;
        sy += db;
        sxx += f * f;
        sxy += f * db;
        ++count;
    }
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double denom = n * sxx - sx * sx;
    return denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

// Runs of frames where pred(i) holds, as inclusive [first, last] index pairs.
template <typename Pred>
std::vector<std::pair<std::size_t, std::size_t>> frame_runs(std::size_t n, Pred pred) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t i = 0;
    while (i < n) {
        if (!pred(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && pred(j + 1)) ++j;
        runs.emplace_back(i, j);
        i = j + 1;
    }
    return runs;
}

// A run of frames i..j covers [start of frame i, end of frame j]. Overlap with the
// following segment, possible when runs are one frame apart, is trimmed from the end.
std::vector<Segment> runs_to_segments(const std::vector<std::pair<std::size_t, std::size_t>>& runs,
                                      const LldSeries& lld) {
    std::vector<Segment> segs;
    for (auto [i, j] : runs) {
        segs.push_back({static_cast<double>(i) * lld.frame_hop_s,
                        static_cast<double>(j - i) * lld.frame_hop_s + lld.frame_len_s});
    }
    for (std::size_t s = 0; s + 1 < segs.size(); ++s) {
        if (segs[s].end_s() > segs[s + 1].start_s) {
            segs[s].duration_s = segs[s + 1].start_s - segs[s].start_s;
        }
    }
    return segs;
}

std::vector<double> durations(const std::vector<Segment>& segs) {
    std::vector<double> d;
    d.reserve(segs.size());
    for (const auto& s : segs) d.push_back(s.duration_s);
    return d;
}

}  // namespace

double silence_floor(const Waveform& wave, const AcousticConfig& cfg) {
    return std::max(cfg.silence_floor_min, cfg.silence_floor_ratio * frame_rms(wave.samples));
}

PitchTrack estimate_f0(const Waveform& wave, const AcousticConfig& cfg) {
    if (!(cfg.f_min_hz > 0 && cfg.f_min_hz < cfg.f_max_hz && cfg.f_max_hz < wave.sample_rate / 2)) {
        throw InputError("estimate_f0: require 0 < f_min < f_max < sample_rate/2");
    }
    const FrameGrid grid = make_grid(wave, cfg);
    const double fs = wave.sample_rate;
    const auto min_lag = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(fs / cfg.f_max_hz)));
    auto max_lag = static_cast<std::size_t>(std::ceil(fs / cfg.f_min_hz));
    max_lag = std::min(max_lag, grid.length - 2);
    if (max_lag <= min_lag) throw InputError("estimate_f0: frame too short for f_min");

    const double floor_rms = silence_floor(wave, cfg);
    const std::span<const double> x(wave.samples);

    PitchTrack track;
    track.frame_hop_s = static_cast<double>(grid.hop) / fs;
    track.f0_hz.assign(grid.count, 0.0);
    track.voiced.assign(grid.count, 0);
    std::vector<double> buf;
    std::vector<double> r;
    for (std::size_t f = 0; f < grid.count; ++f) {
        const auto frame = x.subspan(f * grid.hop, grid.length);
        if (frame_rms(frame) < floor_rms) continue;
        const PitchEstimate est = pitch_of_frame(frame, fs, min_lag, max_lag, buf, r);
        if (est.strength >= cfg.voicing_threshold && est.f0 >= cfg.f_min_hz &&
            est.f0 <= cfg.f_max_hz) {
            track.f0_hz[f] = est.f0;
            track.voiced[f] = 1;
        }
    }
    return track;
}

LldSeries compute_llds(const Waveform& wave, const AcousticConfig& cfg) {
    const PitchTrack pitch = estimate_f0(wave, cfg);
    const FrameGrid grid = make_grid(wave, cfg);
    const double fs = wave.sample_rate;
    const std::span<const double> x(wave.samples);

    LldSeries lld;
    lld.f0_hz = pitch.f0_hz;
    lld.voiced = pitch.voiced;
    lld.frame_hop_s = static_cast<double>(grid.hop) / fs;
    lld.frame_len_s = static_cast<double>(grid.length) / fs;
    lld.silence_floor = silence_floor(wave, cfg);
    lld.duration_s = wave.duration_s();
    lld.rms_energy.assign(grid.count, 0.0);
    lld.jitter_local.assign(grid.count, 0.0);
    lld.shimmer_local.assign(grid.count, 0.0);
    lld.spectral_centroid_hz.assign(grid.count, 0.0);
    lld.spectral_slope_0_1k.assign(grid.count, 0.0);
    lld.zero_crossing_rate.assign(grid.count, 0.0);

    const std::size_t nfft = next_pow2(grid.length);
    const double bin_hz = fs / static_cast<double>(nfft);
    RealFft fft(nfft);
    std::vector<double> window(grid.length);
    for (std::size_t i = 0; i < grid.length; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(grid.length - 1));
    }
    std::vector<double> mag;

    for (std::size_t f = 0; f < grid.count; ++f) {
        const auto frame = x.subspan(f * grid.hop, grid.length);
        lld.rms_energy[f] = frame_rms(frame);

        std::size_t crossings = 0;
        for (std::size_t i = 1; i < frame.size(); ++i) {
            if ((frame[i] >= 0.0) != (frame[i - 1] >= 0.0)) ++crossings;
        }
        lld.zero_crossing_rate[f] =
            static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);

        auto in = fft.input();
        std::fill(in.begin(), in.end(), 0.0);
        for (std::size_t i = 0; i < grid.length; ++i) in[i] = frame[i] * window[i];
        fft.magnitude(mag);
        double weighted = 0.0;
        double total = 0.0;
        for (std::size_t k = 0; k < mag.size(); ++k) {
            weighted += static_cast<double>(k) * bin_hz * mag[k];
            total += mag[k];
        }
        lld.spectral_centroid_hz[f] = total > 0.0 ? weighted / total : 0.0;
        lld.spectral_slope_0_1k[f] = spectral_slope(mag, bin_hz);
    }

    const auto voiced_runs = frame_runs(grid.count, [&](std::size_t i) { return lld.voiced[i] != 0; });
    for (auto [first, last] : voiced_runs) {
        const std::size_t begin = first * grid.hop;
        const std::size_t end = last * grid.hop + grid.length;
        const CycleMeasures m =
            cycle_perturbation(x, begin, end, lld.f0_hz, first, last, grid, fs);
        for (std::size_t f = first; f <= last; ++f) {
            lld.jitter_local[f] = m.jitter;
            lld.shimmer_local[f] = m.shimmer;
        }
    }
    return lld;
}

PauseTrack detect_pauses(const LldSeries& lld, double min_pause_ms) {
    if (!(min_pause_ms > 0.0)) throw InputError("detect_pauses: min_pause_ms must be positive");
    const std::size_t n = lld.size();
    auto is_pause_frame = [&](std::size_t i) {
        return lld.voiced[i] == 0 && lld.rms_energy[i] < lld.silence_floor;
    };

    auto runs = frame_runs(n, is_pause_frame);
    std::erase_if(runs, [&](const auto& run) { return run.first == 0 || run.second + 1 == n; });

    PauseTrack track;
    for (const Segment& s : runs_to_segments(runs, lld)) {
        if (s.duration_s * 1000.0 >= min_pause_ms - 1e-9) track.pauses.push_back(s);
    }
    track.voiced_segments =
        runs_to_segments(frame_runs(n, [&](std::size_t i) { return lld.voiced[i] != 0; }), lld);
    return track;
}

namespace {

struct TrackSpec {
    const char* name;
    std::vector<double> LldSeries::*track;
    bool voiced_only;
};

const TrackSpec kTracks[] = {
    {"f0", &LldSeries::f0_hz, true},
    {"voiced", nullptr, false},
    {"rms_energy", &LldSeries::rms_energy, false},
    {"jitter", &LldSeries::jitter_local, true},
    {"shimmer", &LldSeries::shimmer_local, true},
    {"spectral_centroid", &LldSeries::spectral_centroid_hz, false},
    {"spectral_slope", &LldSeries::spectral_slope_0_1k, false},
    {"zcr", &LldSeries::zero_crossing_rate, false},
};

const char* const kFunctionals[] = {"mean", "std", "p20", "p80"};

}  // namespace

const std::vector<std::string>& egemaps_schema() {
    static const std::vector<std::string> schema = [] {
        std::vector<std::string> names;
        for (const auto& t : kTracks) {
            for (const char* fn : kFunctionals) {
                names.push_back(std::string("egemaps.") + t.name + "." + fn);
            }
        }
        names.emplace_back("egemaps.voiced_frame_count");
        return names;
    }();
    return schema;
}

FeatureVector egemaps_functionals(const LldSeries& lld) {
    if (lld.size() == 0) throw InputError("egemaps_functionals: empty LLD series");
    std::size_t voiced_count = 0;
    for (auto v : lld.voiced) voiced_count += v != 0;

    FeatureVector fv;
    fv.names = egemaps_schema();
    fv.values.reserve(fv.names.size());
    for (const auto& t : kTracks) {
        std::vector<double> values;
        for (std::size_t i = 0; i < lld.size(); ++i) {
            if (t.voiced_only && lld.voiced[i] == 0) continue;
            values.push_back(t.track ? (lld.*t.track)[i] : static_cast<double>(lld.voiced[i]));
        }
        fv.values.push_back(stats::mean(values));
        fv.values.push_back(stats::population_std(values));
        fv.values.push_back(stats::percentile(values, 0.2));
        fv.values.push_back(stats::percentile(values, 0.8));
    }
    fv.values.push_back(static_cast<double>(voiced_count));
    return fv;
}

const std::vector<std::string>& prosody_schema() {
    static const std::vector<std::string> schema = {
        "prosody.pause_count",
        "prosody.pause_rate_per_min",
        "prosody.pause_duration_mean",
        "prosody.pause_duration_std",
        "prosody.pause_duration_max",
        "prosody.voiced_duration_mean",
        "prosody.voiced_duration_std",
        "prosody.voiced_ratio",
        "prosody.post_pause_voiced_mean",
        "prosody.unvoiced_duration_mean",
        "prosody.speech_time_s",
        "prosody.articulation_epochs",
    };
    return schema;
}

FeatureVector prosody_features(const LldSeries& lld, const PauseTrack& pauses) {
    const auto pause_d = durations(pauses.pauses);
    const auto voiced_d = durations(pauses.voiced_segments);

    std::size_t voiced_frames = 0;
    for (auto v : lld.voiced) voiced_frames += v != 0;
    const double voiced_ratio =
        lld.size() ? static_cast<double>(voiced_frames) / static_cast<double>(lld.size()) : 0.0;

    std::vector<double> post_pause;
    for (const auto& p : pauses.pauses) {
        auto it = std::find_if(pauses.voiced_segments.begin(), pauses.voiced_segments.end(),
                               [&](const Segment& v) { return v.start_s >= p.start_s; });
        if (it != pauses.voiced_segments.end()) post_pause.push_back(it->duration_s);
    }

    const auto unvoiced_runs = frame_runs(lld.size(), [&](std::size_t i) { return lld.voiced[i] == 0; });
    const auto unvoiced_d = durations(runs_to_segments(unvoiced_runs, lld));

    const double minutes = lld.duration_s / 60.0;

    FeatureVector fv;
    fv.names = prosody_schema();
    fv.values = {
        static_cast<double>(pause_d.size()),
        minutes > 0.0 ? static_cast<double>(pause_d.size()) / minutes : 0.0,
        stats::mean(pause_d),
        stats::population_std(pause_d),
        pause_d.empty() ? 0.0 : *std::max_element(pause_d.begin(), pause_d.end()),
        stats::mean(voiced_d),
        stats::population_std(voiced_d),
        voiced_ratio,
        stats::mean(post_pause),
        stats::mean(unvoiced_d),
        std::accumulate(voiced_d.begin(), voiced_d.end(), 0.0),
        static_cast<double>(voiced_d.size()),
    };
    return fv;
}

AcousticFeatures extract_acoustic_features(const Waveform& wave, const AcousticConfig& cfg) {
    const LldSeries lld = compute_llds(wave, cfg);
    const PauseTrack pauses = detect_pauses(lld, cfg.min_pause_ms);
    return {egemaps_functionals(lld), prosody_features(lld, pauses)};
}

}  // namespace cogpipe
