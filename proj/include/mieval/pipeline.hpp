#pragma once

#include <string>
#include <vector>

#include "mieval/config.hpp"
#include "mieval/report.hpp"
#include "mieval/seg/model.hpp"

namespace mieval::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

enum class ClassifyMode { Clinical, Image, Both };
ClassifyMode classify_mode_from_string(const std::string& s);

/// Preprocesses one raw case for a network role: resized + normalized image
/// and, when labels are present, the role-space targets on the same grid.
seg::TrainCase prepare_case(const io::CaseEntry& entry, const RunConfig& cfg,
                            seg::NetRole role);

/// Trains one network on the configured dataset split; writes the checkpoint,
/// the history CSV and a manifest under cfg.out_dir.
seg::TrainHistory cmd_train_seg(const RunConfig& cfg, seg::NetRole role);

/// Runs both networks, merges, maps back to the native grid and writes one
/// NIfTI per case under cfg.out_dir/predictions. Empty case list = all cases.
std::vector<std::string> cmd_predict(const RunConfig& cfg,
                                     std::vector<std::string> case_ids);

/// Fits the cascaded clinical classifier on every labeled record and stores
/// it as JSON.
clinical::ClinicalPipeline cmd_fit_clinical(const RunConfig& cfg);

struct ClassifyRow {
    std::string case_id;
    io::CaseClass clinical_pred = io::CaseClass::Unknown;
    double clinical_decision = 0.0;
    io::CaseClass image_pred = io::CaseClass::Unknown;
    io::CaseClass truth = io::CaseClass::Unknown;
};

struct ClassifyResult {
    std::vector<ClassifyRow> rows;
    std::optional<double> clinical_accuracy;
    std::optional<double> image_accuracy;
    std::optional<double> agreement;  // both mode only
};

ClassifyResult cmd_classify(const RunConfig& cfg, ClassifyMode mode,
                            const std::filesystem::path& predictions_dir = {});

struct EvaluateResult {
    std::vector<metrics::CaseReport> cases;
    metrics::SummaryReport summary;
};

EvaluateResult cmd_evaluate(const RunConfig& cfg,
                            const std::filesystem::path& predictions_dir,
                            const std::filesystem::path& ground_truth_dir);

clinical::CrossvalResult cmd_crossval(const RunConfig& cfg);

/// Clinical records of a dataset index, encoded against the config schema.
std::vector<clinical::ClinicalRecord> load_clinical_records(const RunConfig& cfg,
                                                            const io::DatasetIndex& idx);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mieval::pipeline
