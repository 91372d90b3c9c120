#pragma once

#include <cstdint>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "mieval/clinical/features.hpp"
#include "mieval/clinical/svm.hpp"

namespace mieval::clinical {

struct SvmHyperparams {
    double linear_c = 1.0;
    int linear_epochs = 4000;
    double selection_tau = 0.1;
    double rbf_c = 1.0;
    std::optional<double> gamma;  // default: 1/(d_sel * Var)
    double kkt_tol = 1e-3;
    /// Optional inner 3-fold grid search over C and gamma scales.
    bool grid_search = false;
    std::vector<double> grid_c = {0.1, 1.0, 10.0};
    std::vector<double> grid_gamma_scale = {0.01, 0.1, 1.0};
};

/// Standardizer -> linear-SVM feature selection -> RBF SVM, the full
/// cascade fitted on labeled records.
struct ClinicalPipeline {
    StandardizerStats stats;
    LinearSvmModel linear;
    std::vector<int> selected_features;
    RbfSvmModel rbf;
    bool fitted = false;
};

struct ClinicalPrediction {
    int label = kPathological;  // kNormal / kPathological
    double decision = 0.0;
};

ClinicalPipeline fit_clinical_pipeline(const std::vector<ClinicalRecord>& labeled,
                                       const SvmHyperparams& hp, std::uint64_t seed);

/// Standardizes, restricts to the selected features and applies the RBF
/// decision; a tie (decision value 0) counts as pathological.
ClinicalPrediction predict_clinical(const ClinicalPipeline& pipeline,
                                    const ClinicalRecord& record);

nlohmann::json pipeline_to_json(const ClinicalPipeline& pipeline);
ClinicalPipeline pipeline_from_json(const nlohmann::json& j);

/// Deterministic stratified fold assignment; per class, fold sizes differ by
/// at most one.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k,
                                  std::uint64_t seed);

struct CrossvalResult {
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
    std::vector<std::vector<int>> fold_selected_features;
    std::vector<ClinicalPipeline> fold_pipelines;
    std::vector<int> fold_assignment;
};

/// Stratified k-fold cross-validation; every statistic (standardizer, both
/// SVMs, grid search) is fitted inside the training folds only.
CrossvalResult crossval_kfold(const std::vector<ClinicalRecord>& records,
                              const SvmHyperparams& hp, std::uint64_t seed, int k = 5);

}  // namespace mieval::clinical
