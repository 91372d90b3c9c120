#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "nlohmann/json_fwd.hpp"

#include "mieval/clinical/features.hpp"
#include "mieval/clinical/pipeline.hpp"
#include "mieval/dataset.hpp"
#include "mieval/preproc.hpp"
#include "mieval/seg/model.hpp"
#include "mieval/slice_rule.hpp"

namespace mieval {

/// One structured document drives every command. Defaults mirror the
/// reference training setup (256x256 input, 32 base features, 3x3 kernels,
/// lr 1e-3, 500 epochs, patience 200, 5 folds, 2-slice rule); the seed is
/// mandatory so no run ever depends on the wall clock.
struct RunConfig {
    std::filesystem::path dataset_root;
    io::DatasetLayout layout;
    clinical::ClinicalSchema schema = clinical::ClinicalSchema::default_schema();
    PreprocConfig preproc;

    struct NetConfig {
        int base_features = 32;
        int depth = 4;
        int se_reduction = 16;
    };
    NetConfig anatomical, pathological;

    seg::TrainConfig train;

    struct SplitConfig {
        int n_val = 15;
        int val_pathological = 10;
        int val_normal = 5;
    };
    SplitConfig split;

    clinical::SvmHyperparams svm;
    SliceRuleConfig slice_rule;

    std::uint64_t seed = 0;
    std::filesystem::path out_dir;

    /// Network spec for a role, input size taken from the preproc target.
    seg::UNetSpec unet_spec(seg::NetRole role) const;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir);

/// Canonical serialization (sorted keys, out_dir excluded) used for the
/// manifest hash.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace mieval
