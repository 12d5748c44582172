#include "cogpipe/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "cogpipe/common.hpp"

namespace cogpipe {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
           (static_cast<std::uint32_t>(b[off + 2]) << 16) |
           (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t off, const char* tag) {
    return std::memcmp(b.data() + off, tag, 4) == 0;
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

}  // namespace

Waveform read_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
        throw FormatError("wav: not a RIFF/WAVE file");
    }

    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
    bool have_fmt = false;
    std::span<const std::uint8_t> data;
    bool have_data = false;

    std::size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const std::uint32_t size = le32(bytes, off + 4);
        const std::size_t body = off + 8;
        if (size > bytes.size() - body) {
            throw FormatError("wav: truncated chunk at byte " + std::to_string(off));
        }
        if (tag_is(bytes, off, "fmt ")) {
            if (size < 16) throw FormatError("wav: fmt chunk too short");
            format = le16(bytes, body);
            channels = le16(bytes, body + 2);
            rate = le32(bytes, body + 4);
            bits = le16(bytes, body + 14);
            if (format == kFormatExtensible) {
                if (size < 40) throw FormatError("wav: extensible fmt chunk too short");
                // First two bytes of the sub-format GUID carry the actual codec.
                format = le16(bytes, body + 24);
            }
            have_fmt = true;
        } else if (tag_is(bytes, off, "data")) {
            data = bytes.subspan(body, size);
            have_data = true;
        }
        off = body + size + (size & 1U);
    }

    if (!have_fmt) throw FormatError("wav: missing fmt chunk");
    if (!have_data) throw FormatError("wav: missing data chunk");
    if (channels != 1 && channels != 2) {
        throw FormatError("wav: unsupported channel count " + std::to_string(channels));
    }
    if (rate == 0) throw FormatError("wav: zero sample rate");
    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool f32 = format == kFormatFloat && bits == 32;
    if (!pcm16 && !f32) {
        throw FormatError("wav: unsupported codec (format " + std::to_string(format) + ", " +
                          std::to_string(bits) + " bits)");
    }

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    if (data.size() % frame_bytes != 0) throw FormatError("wav: truncated sample frame");
    const std::size_t frames = data.size() / frame_bytes;
    if (frames == 0) throw FormatError("wav: no samples");

    Waveform w;
    w.sample_rate = rate;
    w.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t p = i * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                acc += static_cast<std::int16_t>(le16(data, p)) / 32768.0;
            } else {
                acc += std::bit_cast<float>(le32(data, p));
            }
        }
        w.samples[i] = acc / channels;
    }
    return w;
}

Waveform read_wav_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read_wav(bytes);
}

std::vector<std::uint8_t> write_wav_pcm16(const Waveform& wave) {
    const auto n = static_cast<std::uint32_t>(wave.samples.size());
    const auto rate = static_cast<std::uint32_t>(std::lround(wave.sample_rate));
    std::vector<std::uint8_t> out;
    out.reserve(44 + 2 * n);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put32(out, 36 + 2 * n);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put32(out, 16);
    put16(out, kFormatPcm);
    put16(out, 1);
    put32(out, rate);
    put32(out, rate * 2);
    put16(out, 2);
    put16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put32(out, 2 * n);
    for (double s : wave.samples) {
        const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    }
    return out;
}

}  // namespace cogpipe
