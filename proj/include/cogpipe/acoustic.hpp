#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogpipe/feature_vector.hpp"
#include "cogpipe/wav.hpp"

namespace cogpipe {

// Analysis parameters for every acoustic extractor.
struct AcousticConfig {
    double frame_ms = 25.0;
    double hop_ms = 10.0;
    double f_min_hz = 55.0;
    double f_max_hz = 500.0;
    double voicing_threshold = 0.45;    // normalized autocorrelation peak
    double silence_floor_min = 1e-4;    // absolute RMS floor
    double silence_floor_ratio = 0.02;  // relative to whole-signal RMS
    double min_pause_ms = 200.0;
};

struct PitchTrack {
    std::vector<double> f0_hz;       // 0 where unvoiced
    std::vector<std::uint8_t> voiced;
    double frame_hop_s = 0.0;
};

// Per-frame low-level descriptors. All tracks have one entry per analysis frame.
struct LldSeries {
    std::vector<double> f0_hz;
    std::vector<std::uint8_t> voiced;
    std::vector<double> rms_energy;
    std::vector<double> jitter_local;
    std::vector<double> shimmer_local;
    std::vector<double> spectral_centroid_hz;
    std::vector<double> spectral_slope_0_1k;  // dB per Hz
    std::vector<double> zero_crossing_rate;

    double frame_hop_s = 0.0;
    double frame_len_s = 0.0;
    double silence_floor = 0.0;  // RMS below this counts as low-energy
    double duration_s = 0.0;     // length of the analysed recording

    std::size_t size() const noexcept { return f0_hz.size(); }
};

struct Segment {
    double start_s = 0.0;
    double duration_s = 0.0;

    double end_s() const noexcept { return start_s + duration_s; }
};

struct PauseTrack {
    std::vector<Segment> pauses;
    std::vector<Segment> voiced_segments;
};

// max(silence_floor_min, silence_floor_ratio * RMS(waveform)).
double silence_floor(const Waveform& wave, const AcousticConfig& cfg);

// Normalized-autocorrelation pitch tracker. Throws InputError when the frame is longer
// than the signal or the search range is invalid.
PitchTrack estimate_f0(const Waveform& wave, const AcousticConfig& cfg = {});

LldSeries compute_llds(const Waveform& wave, const AcousticConfig& cfg = {});

// Pauses are maximal interior runs of unvoiced, low-energy frames lasting at least
// `min_pause_ms`. Runs touching the first or last frame are leading/trailing silence.
PauseTrack detect_pauses(const LldSeries& lld, double min_pause_ms);

// 33 features: {mean, std, p20, p80} for each of the eight tracks plus the voiced frame count.
FeatureVector egemaps_functionals(const LldSeries& lld);
const std::vector<std::string>& egemaps_schema();

// 12 prosodic timing features.
FeatureVector prosody_features(const LldSeries& lld, const PauseTrack& pauses);
const std::vector<std::string>& prosody_schema();

struct AcousticFeatures {
    FeatureVector egemaps;
    FeatureVector prosody;
};

AcousticFeatures extract_acoustic_features(const Waveform& wave, const AcousticConfig& cfg = {});

namespace stats {

double mean(const std::vector<double>& v);
double population_std(const std::vector<double>& v);
// Linear interpolation between closest ranks; q in [0, 1].
double percentile(std::vector<double> v, double q);

}  // namespace stats

}  // namespace cogpipe
