#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogpipe/feature_vector.hpp"

namespace cogpipe {

// A num_frames x dim sequence of encoder outputs, frame-major.
struct EmbeddingSequence {
    std::string source_id;
    std::uint32_t dim = 0;
    std::uint32_t num_frames = 0;
    std::vector<float> values;

    std::span<const float> frame(std::size_t i) const { return {values.data() + i * dim, dim}; }

    friend bool operator==(const EmbeddingSequence&, const EmbeddingSequence&) = default;
};

// Contents of the `<file>.meta.json` sidecar written by the extractor.
struct EmbeddingMeta {
    std::string subject_id;
    std::string task;
    std::string source_id;
    std::string model_name;
    bool empty_transcript = false;
};

inline constexpr char kEmbseqMagic[8] = {'E', 'M', 'B', 'S', 'E', 'Q', '0', '1'};
inline constexpr std::size_t kEmbseqHeaderBytes = 16;

// EMBSEQ01: 8-byte magic, u32 dim, u32 num_frames (little-endian), then float32 payload.
// Throws FormatError naming the byte offset of the problem. source_id is left empty;
// it comes from the sidecar.
EmbeddingSequence parse_embseq(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_embseq(const EmbeddingSequence& seq);

EmbeddingMeta parse_embedding_meta(const std::string& json_text);
std::string write_embedding_meta(const EmbeddingMeta& meta);

// Reads `path` and, when present, `path + ".meta.json"` to fill source_id.
EmbeddingSequence load_embseq_file(const std::filesystem::path& path,
                                   const std::string& default_source_id);

// `<source>.mean.<j>` for every j, then `<source>.std.<j>`; population std.
// With include_std = false only the mean half is produced.
FeatureVector pool_mean_std(const EmbeddingSequence& seq, bool include_std = true);

}  // namespace cogpipe
