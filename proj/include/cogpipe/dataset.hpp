#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cogpipe {

// Ordered HC < MCI < Dementia; the order is used for reports and matrices only.
enum class Diagnosis : int { HC = 0, MCI = 1, Dementia = 2 };

inline constexpr std::array<Diagnosis, 3> kAllDiagnoses{Diagnosis::HC, Diagnosis::MCI,
                                                        Diagnosis::Dementia};

std::string_view to_string(Diagnosis d) noexcept;
std::optional<Diagnosis> parse_diagnosis(std::string_view text) noexcept;

// Elicitation tasks: semantic fluency, phonemic fluency, cookie theft description.
enum class Task : int { SFT = 0, PFT = 1, CTD = 2 };

inline constexpr std::array<Task, 3> kAllTasks{Task::SFT, Task::PFT, Task::CTD};

std::string_view to_string(Task t) noexcept;       // "SFT"
std::string_view to_lower_name(Task t) noexcept;   // "sft"

struct SubjectRecord {
    std::string subject_id;
    Diagnosis diagnosis = Diagnosis::HC;
    std::optional<int> mmse;
    std::optional<int> age;
    std::optional<std::string> gender;
    std::array<std::optional<std::filesystem::path>, 3> audio_paths;

    const std::optional<std::filesystem::path>& audio(Task t) const {
        return audio_paths[static_cast<int>(t)];
    }
};

class Cohort {
public:
    Cohort() = default;
    // Throws InputError on duplicate ids or MMSE outside [0, 30].
    explicit Cohort(std::vector<SubjectRecord> records);

    const std::vector<SubjectRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const SubjectRecord& operator[](std::size_t i) const { return records_[i]; }

    std::size_t class_count(Diagnosis d) const noexcept { return counts_[static_cast<int>(d)]; }
    const std::array<std::size_t, 3>& class_counts() const noexcept { return counts_; }

    std::vector<Diagnosis> diagnoses() const;
    Cohort subset(const std::vector<std::size_t>& indices) const;

private:
    std::vector<SubjectRecord> records_;
    std::array<std::size_t, 3> counts_{};
};

inline constexpr std::string_view kManifestHeader =
    "subject_id,diagnosis,mmse,age,gender,path_sft,path_pft,path_ctd";

// Parses the manifest CSV. Errors name the 1-based file line of the offending row.
// Relative audio paths are resolved against `base_dir` when it is non-empty.
Cohort parse_manifest(std::string_view csv_text, const std::filesystem::path& base_dir = {});

Cohort load_manifest(const std::filesystem::path& path);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

struct SplitPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<Fold> folds;
};

// Class-stratified k-fold split. Within each class the members are shuffled with SplitMix64
// and dealt round-robin; the dealing position carries over between classes so fold sizes
// stay balanced overall.
SplitPlan stratified_kfold(const std::vector<Diagnosis>& labels, int k, std::uint64_t seed);
SplitPlan stratified_kfold(const Cohort& cohort, int k, std::uint64_t seed);

enum class BinaryScheme {
    DementiaVsRest,  // Dementia -> +1
    HCVsImpaired,    // MCI, Dementia -> +1 ("impaired"), HC -> -1
};

std::vector<int> binarize_labels(const std::vector<Diagnosis>& labels, BinaryScheme scheme);
std::vector<int> binarize_labels(const Cohort& cohort, BinaryScheme scheme);

}  // namespace cogpipe
