#include "mieval/dataset.hpp"

#include <algorithm>

#include "mieval/rng.hpp"

namespace mieval::io {

namespace fs = std::filesystem;

std::string to_string(CaseClass c) {
    switch (c) {
        case CaseClass::Normal: return "normal";
        case CaseClass::Pathological: return "pathological";
        default: return "unknown";
    }
}

namespace {

std::string expand(std::string templ, const std::string& case_id) {
    std::size_t pos = 0;
    while ((pos = templ.find("{case}", pos)) != std::string::npos) {
        templ.replace(pos, 6, case_id);
        pos += case_id.size();
    }
    return templ;
}

/// Resolves a path template, also trying the .nii/.nii.gz sibling.
std::optional<fs::path> resolve(const fs::path& root, const std::string& templ,
                                const std::string& case_id) {
    if (templ.empty()) return std::nullopt;
    fs::path p = root / expand(templ, case_id);
    if (fs::exists(p)) return p;
    if (p.extension() == ".gz") {
        fs::path alt = p.parent_path() / p.stem();  // drop .gz
        if (fs::exists(alt)) return alt;
    } else if (p.extension() == ".nii") {
        fs::path alt = p;
        alt += ".gz";
        if (fs::exists(alt)) return alt;
    }
    return std::nullopt;
}

}  // namespace

const CaseEntry* DatasetIndex::find(std::string_view case_id) const {
    for (const auto& c : cases) {
        if (c.case_id == case_id) return &c;
    }
    return nullptr;
}

DatasetIndex load_dataset(const fs::path& root, const DatasetLayout& layout) {
    if (!fs::is_directory(root)) {
        throw DataError("dataset root " + root.string() + " is not a directory");
    }

    DatasetIndex idx;
    idx.root = root;
    idx.layout = layout;

    std::vector<std::string> case_ids;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) case_ids.push_back(entry.path().filename().string());
    }
    std::sort(case_ids.begin(), case_ids.end());

    for (const std::string& id : case_ids) {
        CaseEntry ce;
        ce.case_id = id;
        auto image = resolve(root, layout.image_path, id);
        if (!image) {
            throw DataError("case " + id + ": image file missing (expected " +
                            expand(layout.image_path, id) + ")");
        }
        ce.image_path = *image;
        ce.label_path = resolve(root, layout.label_path, id);
        if (!layout.clinical_csv) {
            ce.clinical_path = resolve(root, layout.clinical_path, id);
        }
        for (const auto& [prefix, cls] : layout.class_prefixes) {
            if (id.rfind(prefix, 0) == 0) {
                ce.truth = cls;
                break;
            }
        }
        idx.cases.push_back(std::move(ce));
    }
    return idx;
}

std::pair<DatasetIndex, DatasetIndex> split_dataset(const DatasetIndex& idx, int n_val,
                                                    int val_pathological, int val_normal,
                                                    std::uint64_t seed) {
    if (n_val != val_pathological + val_normal) {
        throw ConfigError("split: n_val must equal val_pathological + val_normal");
    }
    if (val_pathological < 0 || val_normal < 0) {
        throw ConfigError("split: per-class validation counts must be >= 0");
    }

    std::vector<std::size_t> path_cases, normal_cases, other_cases;
    for (std::size_t i = 0; i < idx.cases.size(); ++i) {
        switch (idx.cases[i].truth) {
            case CaseClass::Pathological: path_cases.push_back(i); break;
            case CaseClass::Normal: normal_cases.push_back(i); break;
            default: other_cases.push_back(i); break;
        }
    }
    if (std::size_t(val_pathological) > path_cases.size()) {
        throw DataError("split: requested " + std::to_string(val_pathological) +
                        " pathological validation cases, dataset has " +
                        std::to_string(path_cases.size()));
    }
    if (std::size_t(val_normal) > normal_cases.size()) {
        throw DataError("split: requested " + std::to_string(val_normal) +
                        " normal validation cases, dataset has " +
                        std::to_string(normal_cases.size()));
    }

    Rng rng(seed);
    rng.shuffle(path_cases);
    rng.shuffle(normal_cases);

    std::vector<bool> in_val(idx.cases.size(), false);
    for (int i = 0; i < val_pathological; ++i) in_val[path_cases[i]] = true;
    for (int i = 0; i < val_normal; ++i) in_val[normal_cases[i]] = true;

    DatasetIndex train, val;
    train.root = val.root = idx.root;
    train.layout = val.layout = idx.layout;
    for (std::size_t i = 0; i < idx.cases.size(); ++i) {
        (in_val[i] ? val : train).cases.push_back(idx.cases[i]);
    }
    return {std::move(train), std::move(val)};
}

}  // namespace mieval::io
