#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cogpipe {

struct Waveform {
    std::vector<double> samples;  // mono, nominally in [-1, 1]
    double sample_rate = 0.0;     // Hz

    double duration_s() const noexcept {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Decodes RIFF/WAVE with 16-bit PCM or 32-bit IEEE float samples (plain or
// WAVE_FORMAT_EXTENSIBLE), mono or stereo. Stereo is downmixed by channel mean and
// 16-bit samples are scaled by 1/32768. Throws FormatError on anything else.
Waveform read_wav(std::span<const std::uint8_t> bytes);
Waveform read_wav_file(const std::filesystem::path& path);

// Encodes mono 16-bit PCM; samples are clipped to [-1, 1).
std::vector<std::uint8_t> write_wav_pcm16(const Waveform& wave);

}  // namespace cogpipe
