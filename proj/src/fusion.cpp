#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cogpipe/csv.hpp"
#include "cogpipe/pipeline.hpp"

namespace cogpipe {

std::string_view to_string(ModelVariant v) noexcept {
    switch (v) {
        case ModelVariant::Base: return "base";
        case ModelVariant::BasePlusEgemaps: return "egemaps";
        case ModelVariant::BasePlusProsody: return "prosody";
    }
    return "?";
}

std::optional<ModelVariant> parse_variant(std::string_view text) noexcept {
    for (auto v : {ModelVariant::Base, ModelVariant::BasePlusEgemaps, ModelVariant::BasePlusProsody}) {
        if (text == to_string(v)) return v;
    }
    return std::nullopt;
}

namespace {

bool uses_egemaps(ModelVariant v) { return v == ModelVariant::BasePlusEgemaps; }
bool uses_prosody(ModelVariant v) { return v == ModelVariant::BasePlusProsody; }

std::vector<std::string> embedding_names(std::string_view source, std::uint32_t dim, bool with_std) {
    std::vector<std::string> names;
    for (std::uint32_t j = 0; j < dim; ++j) names.push_back(std::string(source) + ".mean." + std::to_string(j));
    if (with_std) {
        for (std::uint32_t j = 0; j < dim; ++j) names.push_back(std::string(source) + ".std." + std::to_string(j));
    }
    return names;
}

struct Block {
    const std::optional<FeatureVector>* features;
    std::vector<std::string> names;
};

std::vector<Block> task_blocks(const TaskFeatures& tf, ModelVariant variant, const BlockLayout& layout) {
    std::vector<Block> blocks;
    blocks.push_back({&tf.speech, embedding_names(kSpeechSource, layout.speech_dim, true)});
    blocks.push_back({&tf.text, embedding_names(kTextSource, layout.text_dim, false)});
    if (uses_egemaps(variant)) blocks.push_back({&tf.egemaps, egemaps_schema()});
    if (uses_prosody(variant)) blocks.push_back({&tf.prosody, prosody_schema()});
    return blocks;
}

std::string flag_name(Task t) { return "present." + std::string(to_lower_name(t)); }

}  // namespace

std::vector<std::string> fused_schema(ModelVariant variant, const BlockLayout& layout) {
    std::vector<std::string> schema;
    const TaskFeatures empty;
    for (Task t : kAllTasks) {
        const std::string prefix = std::string(to_lower_name(t)) + ".";
        for (const auto& block : task_blocks(empty, variant, layout)) {
            for (const auto& n : block.names) schema.push_back(prefix + n);
        }
    }
    for (Task t : kAllTasks) schema.push_back(flag_name(t));
    return schema;
}

FeatureVector assemble_subject_vector(const SubjectFeatures& features, ModelVariant variant,
                                      const BlockLayout& layout) {
    bool any_task = false;
    for (const auto& tf : features) any_task = any_task || tf.any();
    if (!any_task) throw InputError("assemble_subject_vector: no task has features");

    FeatureVector fv;
    fv.names = fused_schema(variant, layout);
    fv.values.reserve(fv.names.size());
    for (Task t : kAllTasks) {
        const TaskFeatures& tf = features[static_cast<int>(t)];
        for (const auto& block : task_blocks(tf, variant, layout)) {
            const auto& opt = *block.features;
            if (!opt) {
                fv.values.insert(fv.values.end(), block.names.size(), 0.0);
                continue;
            }
            if (opt->size() != block.names.size()) {
                throw InputError("assemble_subject_vector: " + std::string(to_string(t)) +
                                 " block has " + std::to_string(opt->size()) + " features, expected " +
                                 std::to_string(block.names.size()));
            }
            fv.values.insert(fv.values.end(), opt->values.begin(), opt->values.end());
        }
    }
    for (const auto& tf : features) fv.values.push_back(tf.any() ? 1.0 : 0.0);
    return fv;
}

FeatureTable build_feature_table(const std::vector<SubjectFeatures>& subjects,
                                 ModelVariant variant, const BlockLayout& layout) {
    FeatureTable table;
    table.schema = fused_schema(variant, layout);
    table.X = Matrix(0, table.schema.size());
    for (const auto& s : subjects) table.X.append_row(assemble_subject_vector(s, variant, layout).values);
    return table;
}

std::filesystem::path acoustic_csv_path(const std::filesystem::path& features_dir, Task task,
                                        std::string_view family) {
    return features_dir / std::string(to_lower_name(task)) / (std::string(family) + ".csv");
}

std::filesystem::path embedding_path(const std::filesystem::path& emb_dir,
                                     std::string_view subject_id, Task task, std::string_view role) {
    return emb_dir / (std::string(subject_id) + "_" + std::string(to_string(task)) + "." +
                      std::string(role) + ".embseq");
}

std::string write_feature_csv(const std::vector<std::string>& schema,
                              const std::vector<std::pair<std::string, FeatureVector>>& rows) {
    csv::Row header{"subject_id"};
    header.insert(header.end(), schema.begin(), schema.end());
    std::string out = csv::join(header) + "\n";
    for (const auto& [id, fv] : rows) {
        if (fv.names != schema) throw Error("write_feature_csv: row schema differs for '" + id + "'");
        csv::Row row{id};
        for (double v : fv.values) row.push_back(format_double(v));
        out += csv::join(row) + "\n";
    }
    return out;
}

std::vector<std::pair<std::string, FeatureVector>> parse_feature_csv(
    const std::string& text, const std::vector<std::string>& expected_schema) {
    const auto rows = csv::parse(text);
    if (rows.empty()) throw ParseError("feature csv: missing header");
    const auto& header = rows.front();
    if (header.empty() || header[0] != "subject_id" ||
        !std::equal(header.begin() + 1, header.end(), expected_schema.begin(), expected_schema.end())) {
        throw SchemaMismatch("feature csv: header does not match the expected feature schema");
    }
    std::vector<std::pair<std::string, FeatureVector>> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            throw ParseError("feature csv row " + std::to_string(r + 1) + ": expected " +
                             std::to_string(header.size()) + " columns");
        }
        FeatureVector fv;
        fv.names = expected_schema;
        fv.values.reserve(expected_schema.size());
        for (std::size_t c = 1; c < row.size(); ++c) {
            double v = 0.0;
            const auto& cell = row[c];
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw ParseError("feature csv row " + std::to_string(r + 1) + ": invalid value '" +
                                 cell + "'");
            }
            fv.values.push_back(v);
        }
        out.emplace_back(row[0], std::move(fv));
    }
    return out;
}

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot open '" + p.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, FeatureVector> load_acoustic_family(const std::filesystem::path& path,
                                                          const std::vector<std::string>& schema) {
    std::map<std::string, FeatureVector> out;
    if (!std::filesystem::exists(path)) return out;
    for (auto& [id, fv] : parse_feature_csv(slurp(path), schema)) out.emplace(id, std::move(fv));
    return out;
}

void check_width(std::uint32_t& slot, std::uint32_t observed, const std::filesystem::path& file,
                 const char* what) {
    if (slot == 0) {
        slot = observed;
    } else if (slot != observed) {
        throw SchemaMismatch(file.string() + ": " + what + " dim " + std::to_string(observed) +
                             " differs from expected " + std::to_string(slot));
    }
}

}  // namespace

StagedFeatures load_staged_features(const Cohort& cohort, const std::filesystem::path& features_dir,
                                    const std::filesystem::path& emb_dir, ModelVariant variant,
                                    const std::optional<BlockLayout>& layout) {
    StagedFeatures staged;
    if (layout) staged.layout = *layout;
    staged.subjects.resize(cohort.size());

    for (Task t : kAllTasks) {
        std::map<std::string, FeatureVector> egemaps;
        std::map<std::string, FeatureVector> prosody;
        if (uses_egemaps(variant)) {
            egemaps = load_acoustic_family(acoustic_csv_path(features_dir, t, "egemaps"), egemaps_schema());
        }
        if (uses_prosody(variant)) {
            prosody = load_acoustic_family(acoustic_csv_path(features_dir, t, "prosody"), prosody_schema());
        }
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            const auto& rec = cohort[i];
            TaskFeatures& tf = staged.subjects[i][static_cast<int>(t)];

            const auto speech_path = embedding_path(emb_dir, rec.subject_id, t, "speech");
            if (std::filesystem::exists(speech_path)) {
                auto seq = load_embseq_file(speech_path, std::string(kSpeechSource));
                check_width(staged.layout.speech_dim, seq.dim, speech_path, "speech embedding");
                seq.source_id = std::string(kSpeechSource);
                tf.speech = pool_mean_std(seq, true);
            }
            const auto text_path = embedding_path(emb_dir, rec.subject_id, t, "text");
            if (std::filesystem::exists(text_path)) {
                auto seq = load_embseq_file(text_path, std::string(kTextSource));
                check_width(staged.layout.text_dim, seq.dim, text_path, "text embedding");
                seq.source_id = std::string(kTextSource);
                tf.text = pool_mean_std(seq, false);
            }
            if (auto it = egemaps.find(rec.subject_id); it != egemaps.end()) tf.egemaps = it->second;
            if (auto it = prosody.find(rec.subject_id); it != prosody.end()) tf.prosody = it->second;
        }
    }
    if (staged.layout.speech_dim == 0 || staged.layout.text_dim == 0) {
        throw InputError("no speech or text embeddings found under '" + emb_dir.string() + "'");
    }
    return staged;
}

}  // namespace cogpipe
