#include "cogpipe/embeddings.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cogpipe/common.hpp"

namespace cogpipe {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
           (static_cast<std::uint32_t>(b[off + 2]) << 16) |
           (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

void write_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

EmbeddingSequence parse_embseq(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kEmbseqHeaderBytes) {
        throw FormatError("embseq: truncated header at byte " + std::to_string(bytes.size()));
    }
    if (std::memcmp(bytes.data(), kEmbseqMagic, 8) != 0) {
        throw FormatError("embseq: bad magic at byte 0");
    }
    EmbeddingSequence seq;
    seq.dim = read_u32(bytes, 8);
    seq.num_frames = read_u32(bytes, 12);
    if (seq.dim == 0) throw FormatError("embseq: dim must be >= 1 (byte 8)");
    if (seq.num_frames == 0) throw FormatError("embseq: num_frames must be >= 1 (byte 12)");

    const std::uint64_t count = static_cast<std::uint64_t>(seq.dim) * seq.num_frames;
    const std::uint64_t expected = kEmbseqHeaderBytes + 4 * count;
    if (bytes.size() != expected) {
        throw FormatError("embseq: length mismatch at byte " +
                          std::to_string(std::min<std::uint64_t>(bytes.size(), expected)) +
                          ": expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    seq.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t off = kEmbseqHeaderBytes + 4 * i;
        const float v = std::bit_cast<float>(read_u32(bytes, off));
        if (!std::isfinite(v)) {
            throw FormatError("embseq: non-finite value at byte " + std::to_string(off));
        }
        seq.values[i] = v;
    }
    return seq;
}

std::vector<std::uint8_t> write_embseq(const EmbeddingSequence& seq) {
    if (seq.dim == 0 || seq.num_frames == 0 ||
        seq.values.size() != static_cast<std::size_t>(seq.dim) * seq.num_frames) {
        throw Error("write_embseq: invalid sequence shape");
    }
    std::vector<std::uint8_t> out(kEmbseqMagic, kEmbseqMagic + 8);
    out.reserve(kEmbseqHeaderBytes + 4 * seq.values.size());
    write_u32(out, seq.dim);
    write_u32(out, seq.num_frames);
    for (float v : seq.values) write_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

EmbeddingMeta parse_embedding_meta(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("embedding sidecar: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("embedding sidecar: expected a JSON object");
    auto field = [&](const char* key) {
        const auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            throw FormatError(std::string("embedding sidecar: missing string field '") + key + "'");
        }
        return it->get<std::string>();
    };
    EmbeddingMeta m;
    m.subject_id = field("subject_id");
    m.task = field("task");
    m.source_id = field("source_id");
    m.model_name = field("model_name");
    if (const auto it = j.find("empty_transcript"); it != j.end()) {
        if (!it->is_boolean()) throw FormatError("embedding sidecar: 'empty_transcript' must be a boolean");
        m.empty_transcript = it->get<bool>();
    }
    return m;
}

std::string write_embedding_meta(const EmbeddingMeta& meta) {
    nlohmann::json j = {{"subject_id", meta.subject_id},
                        {"task", meta.task},
                        {"source_id", meta.source_id},
                        {"model_name", meta.model_name}};
    if (meta.empty_transcript) j["empty_transcript"] = true;
    return j.dump(2) + "\n";
}

EmbeddingSequence load_embseq_file(const std::filesystem::path& path,
                                   const std::string& default_source_id) {
    EmbeddingSequence seq;
    try {
        seq = parse_embseq(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    seq.source_id = default_source_id;
    const std::filesystem::path meta_path = path.string() + ".meta.json";
    if (std::filesystem::exists(meta_path)) {
        const auto bytes = read_file(meta_path);
        const auto meta = parse_embedding_meta(std::string(bytes.begin(), bytes.end()));
        if (!meta.source_id.empty()) seq.source_id = meta.source_id;
    }
    return seq;
}

FeatureVector pool_mean_std(const EmbeddingSequence& seq, bool include_std) {
    if (seq.num_frames == 0 || seq.dim == 0) throw InputError("pool_mean_std: empty sequence");
    const std::size_t d = seq.dim;
    const double n = seq.num_frames;
    std::vector<double> mean(d, 0.0);
    for (std::size_t f = 0; f < seq.num_frames; ++f) {
        const auto row = seq.frame(f);
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= n;

    std::vector<double> var(d, 0.0);
    for (std::size_t f = 0; f < seq.num_frames; ++f) {
        const auto row = seq.frame(f);
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = row[j] - mean[j];
            var[j] += dev * dev;
        }
    }

    FeatureVector fv;
    fv.names.reserve(include_std ? 2 * d : d);
    fv.values.reserve(include_std ? 2 * d : d);
    for (std::size_t j = 0; j < d; ++j) fv.push(seq.source_id + ".mean." + std::to_string(j), mean[j]);
    if (include_std) {
        for (std::size_t j = 0; j < d; ++j) {
            fv.push(seq.source_id + ".std." + std::to_string(j), std::sqrt(var[j] / n));
        }
    }
    return fv;
}

}  // namespace cogpipe
