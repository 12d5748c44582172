#include "cogpipe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cogpipe/common.hpp"
#include "cogpipe/csv.hpp"

namespace cogpipe {

std::string_view to_string(Diagnosis d) noexcept {
    switch (d) {
        case Diagnosis::HC: return "HC";
        case Diagnosis::MCI: return "MCI";
        case Diagnosis::Dementia: return "Dementia";
    }
    return "?";
}

std::optional<Diagnosis> parse_diagnosis(std::string_view text) noexcept {
    for (Diagnosis d : kAllDiagnoses) {
        if (text == to_string(d)) return d;
    }
    return std::nullopt;
}

std::string_view to_string(Task t) noexcept {
    switch (t) {
        case Task::SFT: return "SFT";
        case Task::PFT: return "PFT";
        case Task::CTD: return "CTD";
    }
    return "?";
}

std::string_view to_lower_name(Task t) noexcept {
    switch (t) {
        case Task::SFT: return "sft";
        case Task::PFT: return "pft";
        case Task::CTD: return "ctd";
    }
    return "?";
}

Cohort::Cohort(std::vector<SubjectRecord> records) : records_(std::move(records)) {
    std::unordered_set<std::string> ids;
    for (const auto& r : records_) {
        if (!ids.insert(r.subject_id).second) {
            throw InputError("duplicate subject_id '" + r.subject_id + "'");
        }
        if (r.mmse && (*r.mmse < 0 || *r.mmse > 30)) {
            throw InputError("subject '" + r.subject_id + "': mmse out of [0,30]");
        }
        ++counts_[static_cast<int>(r.diagnosis)];
    }
}

std::vector<Diagnosis> Cohort::diagnoses() const {
    std::vector<Diagnosis> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.diagnosis);
    return out;
}

Cohort Cohort::subset(const std::vector<std::size_t>& indices) const {
    std::vector<SubjectRecord> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(records_.at(i));
    return Cohort(std::move(out));
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::optional<int> parse_int_cell(const std::string& cell, std::size_t line, const char* column) {
    if (cell.empty()) return std::nullopt;
    int v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ParseError("manifest row " + std::to_string(line) + ": invalid " + column + " '" +
                         cell + "'");
    }
    return v;
}

}  // namespace

Cohort parse_manifest(std::string_view csv_text, const std::filesystem::path& base_dir) {
    const auto rows = csv::parse(csv_text);
    if (rows.empty()) throw ParseError("manifest: missing header row");

    std::vector<std::string> header;
    for (const auto& h : rows.front()) header.push_back(trim(h));
    if (csv::join(header) != kManifestHeader) {
        throw ParseError("manifest: header must be '" + std::string(kManifestHeader) + "'");
    }

    std::vector<SubjectRecord> records;
    std::unordered_set<std::string> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::size_t line = r + 1;
        const auto& row = rows[r];
        const std::string where = "manifest row " + std::to_string(line);
        if (row.size() != 8) {
            throw ParseError(where + ": expected 8 columns, got " + std::to_string(row.size()));
        }
        std::vector<std::string> cells;
        for (const auto& c : row) cells.push_back(trim(c));

        SubjectRecord rec;
        rec.subject_id = cells[0];
        if (rec.subject_id.empty()) throw ParseError(where + ": empty subject_id");
        if (!ids.insert(rec.subject_id).second) {
            throw ParseError(where + ": duplicate subject_id '" + rec.subject_id + "'");
        }
        const auto diag = parse_diagnosis(cells[1]);
        if (!diag) throw ParseError(where + ": unknown label '" + cells[1] + "'");
        rec.diagnosis = *diag;
        rec.mmse = parse_int_cell(cells[2], line, "mmse");
        if (rec.mmse && (*rec.mmse < 0 || *rec.mmse > 30)) {
            throw ParseError(where + ": mmse " + cells[2] + " out of [0,30]");
        }
        rec.age = parse_int_cell(cells[3], line, "age");
        if (!cells[4].empty()) rec.gender = cells[4];
        for (int t = 0; t < 3; ++t) {
            const auto& p = cells[5 + t];
            if (p.empty()) continue;
            std::filesystem::path path(p);
            if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
            rec.audio_paths[t] = path;
        }
        records.push_back(std::move(rec));
    }
    return Cohort(std::move(records));
}

Cohort load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open manifest '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), path.parent_path());
}

SplitPlan stratified_kfold(const std::vector<Diagnosis>& labels, int k, std::uint64_t seed) {
    if (k < 2) throw InputError("stratified_kfold: k must be >= 2");
    std::array<std::vector<std::size_t>, 3> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[static_cast<int>(labels[i])].push_back(i);
    }
    for (Diagnosis d : kAllDiagnoses) {
        const auto& m = members[static_cast<int>(d)];
        if (!m.empty() && m.size() < static_cast<std::size_t>(k)) {
            throw InputError("stratified_kfold: class " + std::string(to_string(d)) + " has " +
                             std::to_string(m.size()) + " members, fewer than k=" +
                             std::to_string(k));
        }
    }

    SplitMix64 rng(seed);
    std::vector<int> fold_of(labels.size(), 0);
    std::size_t deal = 0;
    for (auto& m : members) {
        // Fisher-Yates with the portable generator.
        for (std::size_t i = m.size(); i > 1; --i) {
            const std::size_t j = rng.below(i);
            std::swap(m[i - 1], m[j]);
        }
        for (std::size_t idx : m) fold_of[idx] = static_cast<int>(deal++ % k);
    }

    SplitPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.folds.resize(k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (int f = 0; f < k; ++f) {
            (fold_of[i] == f ? plan.folds[f].val : plan.folds[f].train).push_back(i);
        }
    }
    return plan;
}

SplitPlan stratified_kfold(const Cohort& cohort, int k, std::uint64_t seed) {
    return stratified_kfold(cohort.diagnoses(), k, seed);
}

std::vector<int> binarize_labels(const std::vector<Diagnosis>& labels, BinaryScheme scheme) {
    if (labels.empty()) throw InputError("binarize_labels: empty label list");
    std::vector<int> out;
    out.reserve(labels.size());
    for (Diagnosis d : labels) {
        if (scheme == BinaryScheme::DementiaVsRest) {
            out.push_back(d == Diagnosis::Dementia ? +1 : -1);
        } else {
            out.push_back(d == Diagnosis::HC ? -1 : +1);
        }
    }
    return out;
}

std::vector<int> binarize_labels(const Cohort& cohort, BinaryScheme scheme) {
    return binarize_labels(cohort.diagnoses(), scheme);
}

}  // namespace cogpipe
