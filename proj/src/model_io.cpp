#include <cinttypes>
#include <cstdio>

#include "cogpipe/json_io.hpp"
#include "cogpipe/pipeline.hpp"

namespace cogpipe {

using nlohmann::json;

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::uint64_t parse_hash_hex(const std::string& s) {
    if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw FormatError("model: malformed schema_hash '" + s + "'");
    }
    return std::stoull(s, nullptr, 16);
}

std::string_view kernel_name(KernelKind k) { return k == KernelKind::Linear ? "linear" : "rbf"; }

KernelKind parse_kernel_kind(const std::string& s) {
    if (s == "linear") return KernelKind::Linear;
    if (s == "rbf") return KernelKind::Rbf;
    throw FormatError("model: unknown kernel '" + s + "'");
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, std::size_t cols) {
    Matrix m(0, cols);
    for (const auto& row : j) m.append_row(row.get<std::vector<double>>());
    return m;
}

json kernel_to_json(const Kernel& k) {
    json j = {{"kind", kernel_name(k.kind)}};
    if (k.kind == KernelKind::Rbf) j["gamma"] = k.gamma;
    return j;
}

Kernel kernel_from_json(const json& j) {
    Kernel k;
    k.kind = parse_kernel_kind(j.at("kind").get<std::string>());
    if (k.kind == KernelKind::Rbf) k.gamma = j.at("gamma").get<double>();
    return k;
}

json scaler_to_json(const Scaler& s) { return {{"means", s.means}, {"stds", s.stds}}; }

Scaler scaler_from_json(const json& j) {
    Scaler s{j.at("means").get<std::vector<double>>(), j.at("stds").get<std::vector<double>>()};
    if (s.means.size() != s.stds.size()) throw FormatError("model: scaler length mismatch");
    return s;
}

template <typename Model>
json machine_to_json(const Model& m) {
    return {{"kernel", kernel_to_json(m.kernel)},
            {"C", m.C},
            {"bias", m.bias},
            {"dual_coefs", m.dual_coefs},
            {"support_vectors", matrix_to_json(m.support_vectors)},
            {"scaler", scaler_to_json(m.scaler)}};
}

template <typename Model>
void machine_from_json(const json& j, std::size_t dim, Model& m) {
    m.kernel = kernel_from_json(j.at("kernel"));
    m.C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    m.support_vectors = matrix_from_json(j.at("support_vectors"), dim);
    m.scaler = scaler_from_json(j.at("scaler"));
    if (m.scaler.dim() != dim || m.support_vectors.rows() != m.dual_coefs.size()) {
        throw FormatError("model: machine dimensions do not match the schema");
    }
}

json layout_to_json(const BlockLayout& l) { return {{"speech_dim", l.speech_dim}, {"text_dim", l.text_dim}}; }

BlockLayout layout_from_json(const json& j) {
    return {j.at("speech_dim").get<std::uint32_t>(), j.at("text_dim").get<std::uint32_t>()};
}

json training_to_json(const TrainingMetadata& t, bool with_epsilon) {
    return {{"seed", t.seed},
            {"grid_cell", hyperparameters_to_json(t.hyper, with_epsilon)},
            {"timestamp", t.timestamp}};
}

Hyperparameters hyperparameters_from_json(const json& j) {
    Hyperparameters h;
    h.C = j.at("C").get<double>();
    h.kernel.kind = parse_kernel_kind(j.at("kernel").get<std::string>());
    if (h.kernel.kind == KernelKind::Rbf) {
        const auto& g = j.at("gamma");
        if (!g.is_string()) h.kernel.gamma = g.get<double>();
    }
    if (j.contains("epsilon")) h.epsilon = j.at("epsilon").get<double>();
    return h;
}

TrainingMetadata training_from_json(const json& j) {
    TrainingMetadata t;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.hyper = hyperparameters_from_json(j.at("grid_cell"));
    t.timestamp = j.at("timestamp").get<std::string>();
    return t;
}

json header(std::string_view kind, ModelVariant variant, const BlockLayout& layout,
            const std::vector<std::string>& schema, std::uint64_t hash) {
    return {{"format_version", kModelFormatVersion},
            {"kind", kind},
            {"variant", to_string(variant)},
            {"layout", layout_to_json(layout)},
            {"schema", schema},
            {"schema_hash", hash_hex(hash)}};
}

json parse_document(const std::string& text, std::string_view expected_kind) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("model: expected a JSON object");
    if (!doc.contains("format_version") || doc["format_version"] != kModelFormatVersion) {
        throw FormatError("model: version mismatch (expected format_version " +
                          std::to_string(kModelFormatVersion) + ")");
    }
    if (doc.value("kind", "") != expected_kind) {
        throw FormatError("model: expected kind '" + std::string(expected_kind) + "'");
    }
    return doc;
}

template <typename Model>
void read_header(const json& doc, Model& m) {
    const auto variant = parse_variant(doc.at("variant").get<std::string>());
    if (!variant) throw FormatError("model: unknown variant");
    m.variant = *variant;
    m.layout = layout_from_json(doc.at("layout"));
    m.schema = doc.at("schema").get<std::vector<std::string>>();
    m.schema_hash = parse_hash_hex(doc.at("schema_hash").get<std::string>());
    if (schema_hash(m.schema) != m.schema_hash) throw SchemaMismatch("model: schema mismatch");
}

// Wraps nlohmann access errors (missing keys, wrong types) as FormatError.
template <typename Fn>
auto guarded(Fn fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw FormatError(std::string("model: ") + e.what());
    }
}

}  // namespace

json hyperparameters_to_json(const Hyperparameters& h, bool with_epsilon) {
    json j = {{"C", h.C}, {"kernel", kernel_name(h.kernel.kind)}};
    if (h.kernel.kind == KernelKind::Rbf) {
        if (h.kernel.gamma) j["gamma"] = *h.kernel.gamma;
        else j["gamma"] = "scale";
    }
    if (with_epsilon) j["epsilon"] = h.epsilon;
    return j;
}

std::string save_model(const TwoTierModel& model) {
    json doc = header("two_tier", model.variant, model.layout, model.schema, model.schema_hash);
    doc["tier1"] = machine_to_json(model.tier1);
    doc["tier2"] = machine_to_json(model.tier2);
    doc["training"] = training_to_json(model.training, false);
    return dump_json(doc);
}

std::string save_model(const MmseModel& model) {
    json doc = header("mmse_regressor", model.variant, model.layout, model.schema, model.schema_hash);
    json svr = machine_to_json(model.svr);
    svr["epsilon"] = model.svr.epsilon;
    doc["svr"] = svr;
    doc["clamp"] = {kMmseMin, kMmseMax};
    doc["training"] = training_to_json(model.training, true);
    return dump_json(doc);
}

TwoTierModel load_two_tier_model(const std::string& text) {
    const json doc = parse_document(text, "two_tier");
    return guarded([&] {
        TwoTierModel m;
        read_header(doc, m);
        machine_from_json(doc.at("tier1"), m.schema.size(), m.tier1);
        machine_from_json(doc.at("tier2"), m.schema.size(), m.tier2);
        m.training = training_from_json(doc.at("training"));
        return m;
    });
}

MmseModel load_mmse_model(const std::string& text) {
    const json doc = parse_document(text, "mmse_regressor");
    return guarded([&] {
        MmseModel m;
        read_header(doc, m);
        machine_from_json(doc.at("svr"), m.schema.size(), m.svr);
        m.svr.epsilon = doc.at("svr").at("epsilon").get<double>();
        m.training = training_from_json(doc.at("training"));
        return m;
    });
}

}  // namespace cogpipe
