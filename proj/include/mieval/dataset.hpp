#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mieval/errors.hpp"

namespace mieval::io {

enum class CaseClass { Unknown, Normal, Pathological };

std::string to_string(CaseClass c);

/// Where case files live relative to the dataset root. "{case}" expands to
/// the case folder name. A missing image is an error; missing labels or
/// clinical files just leave the corresponding entry unset.
struct DatasetLayout {
    std::string image_path = "{case}/Images/{case}.nii.gz";
    std::string label_path = "{case}/Contours/{case}.nii.gz";
    std::string clinical_path = "{case}/Info.txt";
    /// Ground-truth class from a case-id prefix, first match wins.
    std::vector<std::pair<std::string, CaseClass>> class_prefixes = {
        {"Case_P", CaseClass::Pathological},
        {"Case_N", CaseClass::Normal},
    };
    /// Optional dataset-level clinical CSV (one row per case) used instead of
    /// per-case clinical files when set. Relative to the dataset root.
    std::optional<std::string> clinical_csv;
};

struct CaseEntry {
    std::string case_id;
    std::filesystem::path image_path;
    std::optional<std::filesystem::path> label_path;
    std::optional<std::filesystem::path> clinical_path;
    CaseClass truth = CaseClass::Unknown;
};

struct DatasetIndex {
    std::filesystem::path root;
    DatasetLayout layout;
    std::vector<CaseEntry> cases;

    const CaseEntry* find(std::string_view case_id) const;
};

/// Scans per-case subfolders under `root`, sorted by case id.
DatasetIndex load_dataset(const std::filesystem::path& root, const DatasetLayout& layout);

/// Deterministic stratified split: the validation set gets exactly
/// `val_pathological` + `val_normal` cases of the respective classes.
std::pair<DatasetIndex, DatasetIndex> split_dataset(const DatasetIndex& idx, int n_val,
                                                    int val_pathological, int val_normal,
                                                    std::uint64_t seed);

}  // namespace mieval::io
