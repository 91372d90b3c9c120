#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mieval/clinical_io.hpp"
#include "mieval/dataset.hpp"

namespace mieval::clinical {

/// Class coding used throughout the classifier stack.
inline constexpr int kNormal = -1;
inline constexpr int kPathological = +1;

enum class FeatureKind { Binary, Ordinal, Continuous };

struct FeatureSpec {
    std::string key;
    FeatureKind kind = FeatureKind::Continuous;
    /// Explicit string codings for binary features ("M" -> 1, ...); generic
    /// yes/no/true/false/0/1 forms are always accepted.
    std::map<std::string, double> mapping;
};

/// Declares the clinical feature vector: names, order and value coding.
struct ClinicalSchema {
    std::vector<FeatureSpec> features;
    bool strict = true;  // unknown keys are an error when set

    int dim() const { return static_cast<int>(features.size()); }

    /// The eleven features of the dataset's clinical sheet, in canonical
    /// order: sex, age, overweight, arterial hypertension, diabetes, familial
    /// history of CAD, troponin, Killip max, ejection fraction, NT-proBNP,
    /// ST segment.
    static ClinicalSchema default_schema();
};

/// Fixed-dimensionality numeric record; missing entries are NaN until
/// imputation.
struct ClinicalRecord {
    std::string case_id;
    std::vector<double> features;
    std::optional<int> label;  // kNormal / kPathological
};

/// Encodes raw key/value pairs against the schema. Missing keys become NaN;
/// unknown keys throw under strict mode.
ClinicalRecord encode_record(const io::RawClinicalRecord& raw, const ClinicalSchema& schema);

ClinicalRecord encode_record(const io::RawClinicalRecord& raw, const ClinicalSchema& schema,
                             std::optional<io::CaseClass> truth);

/// Per-feature mean/std (z-scoring) and median (imputation), fitted on
/// training records only.
struct StandardizerStats {
    std::vector<double> mean, stddev, median;
};

StandardizerStats fit_standardizer(const std::vector<ClinicalRecord>& train);
ClinicalRecord apply_standardizer(const StandardizerStats& stats, const ClinicalRecord& rec);

}  // namespace mieval::clinical
