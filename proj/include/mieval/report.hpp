#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "mieval/dataset.hpp"
#include "mieval/volume.hpp"

namespace mieval::metrics {

/// The four reported structures of the final 5-code map. Myocardium covers
/// codes {2,3,4} (pathology is myocardial tissue); the others are single
/// codes.
enum class Structure { Cavity, Myocardium, Infarction, NoReflow };

inline constexpr Structure kAllStructures[] = {
    Structure::Cavity, Structure::Myocardium, Structure::Infarction,
    Structure::NoReflow};

std::string to_string(Structure s);
std::vector<int> structure_labels(Structure s);
StructureMask structure_mask(const LabelMap& lm, Structure s);

enum class MetricKind { Dsc, HdMm, Rvd };

inline constexpr MetricKind kAllMetrics[] = {MetricKind::Dsc, MetricKind::HdMm,
                                             MetricKind::Rvd};

std::string to_string(MetricKind m);

struct MetricTriple {
    std::optional<double> dsc;
    std::optional<double> hd_mm;
    std::optional<double> rvd;

    std::optional<double> get(MetricKind m) const;
};

/// Per-case metric bundle plus the case-level classification outcome.
struct CaseReport {
    std::string case_id;
    std::map<Structure, MetricTriple> per_structure;
    io::CaseClass predicted = io::CaseClass::Unknown;
    io::CaseClass truth = io::CaseClass::Unknown;
};

/// mean/std/min/max over the non-missing values of one metric.
struct MetricSummary {
    int n = 0;
    int n_missing = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct SummaryReport {
    int n_cases = 0;
    std::map<Structure, std::map<MetricKind, MetricSummary>> per_structure;
    std::optional<double> classification_accuracy;
};

/// Table-style statistics over the case reports. std uses n-1 by default;
/// a single value reports std 0 by convention.
SummaryReport summarize(const std::vector<CaseReport>& reports, bool sample_std = true);

/// All metrics of one (prediction, ground truth) pair, classification via the
/// slice rule for the prediction and pathology presence for the truth.
CaseReport evaluate_case(const std::string& case_id, const LabelMap& prediction,
                         const LabelMap& ground_truth, int min_pathological_slices,
                         int min_pixels_per_slice);

std::string case_reports_csv(const std::vector<CaseReport>& reports);
nlohmann::json summary_to_json(const SummaryReport& summary);

}  // namespace mieval::metrics
