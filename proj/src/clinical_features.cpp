#include "mieval/clinical/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace mieval::clinical {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool is_missing_marker(const std::string& v) {
    const std::string l = lower(v);
    return l.empty() || l == "na" || l == "n/a" || l == "nan" || l == "?";
}

double parse_number(const std::string& v, const std::string& key) {
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw DataError("clinical feature \"" + key + "\": cannot parse \"" + v +
                        "\" as a number");
    }
    while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
    if (pos != v.size()) {
        throw DataError("clinical feature \"" + key + "\": trailing junk in \"" + v + "\"");
    }
    return out;
}

double parse_binary(const std::string& v, const FeatureSpec& spec) {
    const auto it = spec.mapping.find(v);
    if (it != spec.mapping.end()) return it->second;
    const std::string l = lower(v);
    if (l == "1" || l == "yes" || l == "y" || l == "true") return 1.0;
    if (l == "0" || l == "no" || l == "n" || l == "false") return 0.0;
    throw DataError("clinical feature \"" + spec.key + "\": unrecognized binary value \"" +
                    v + "\"");
}

}  // namespace

ClinicalSchema ClinicalSchema::default_schema() {
    ClinicalSchema schema;
    schema.features = {
        {"Sex", FeatureKind::Binary, {{"M", 1.0}, {"F", 0.0}, {"m", 1.0}, {"f", 0.0}}},
        {"Age", FeatureKind::Continuous, {}},
        {"Overweight", FeatureKind::Binary, {}},
        {"Arterial hypertension", FeatureKind::Binary, {}},
        {"Diabetes", FeatureKind::Binary, {}},
        {"Familial history of coronary artery disease", FeatureKind::Binary, {}},
        {"Troponin", FeatureKind::Continuous, {}},
        {"Killip max", FeatureKind::Ordinal, {}},
        {"Ejection fraction", FeatureKind::Continuous, {}},
        {"NT-proBNP", FeatureKind::Continuous, {}},
        {"ST segment", FeatureKind::Binary, {}},
    };
    return schema;
}

ClinicalRecord encode_record(const io::RawClinicalRecord& raw,
                             const ClinicalSchema& schema,
                             std::optional<io::CaseClass> truth) {
    ClinicalRecord rec;
    rec.case_id = raw.case_id;
    rec.features.assign(schema.dim(), std::nan(""));

    if (schema.strict) {
        for (const auto& [key, value] : raw.fields) {
            const bool known =
                std::any_of(schema.features.begin(), schema.features.end(),
                            [&](const FeatureSpec& f) { return f.key == key; });
            if (!known) {
                throw DataError("clinical record " + raw.case_id +
                                ": unrecognized key \"" + key + "\"");
            }
        }
    }

    for (int i = 0; i < schema.dim(); ++i) {
        const FeatureSpec& spec = schema.features[i];
        const auto value = raw.value(spec.key);
        if (!value || is_missing_marker(*value)) continue;
        switch (spec.kind) {
            case FeatureKind::Binary:
                rec.features[i] = parse_binary(*value, spec);
                break;
            case FeatureKind::Ordinal:
            case FeatureKind::Continuous:
                rec.features[i] = parse_number(*value, spec.key);
                break;
        }
    }

    if (truth && *truth != io::CaseClass::Unknown) {
        rec.label = *truth == io::CaseClass::Pathological ? kPathological : kNormal;
    }
    return rec;
}

ClinicalRecord encode_record(const io::RawClinicalRecord& raw,
                             const ClinicalSchema& schema) {
    return encode_record(raw, schema, std::nullopt);
}

StandardizerStats fit_standardizer(const std::vector<ClinicalRecord>& train) {
    if (train.size() < 2) {
        throw DataError("standardizer: need at least 2 training records");
    }
    const std::size_t dim = train.front().features.size();
    StandardizerStats stats;
    stats.mean.assign(dim, 0.0);
    stats.stddev.assign(dim, 1.0);
    stats.median.assign(dim, 0.0);

    for (std::size_t f = 0; f < dim; ++f) {
        std::vector<double> vals;
        for (const auto& rec : train) {
            if (rec.features.size() != dim) {
                throw ShapeError("standardizer: inconsistent record dimensionality");
            }
            const double v = rec.features[f];
            if (!std::isnan(v)) vals.push_back(v);
        }
        if (vals.empty()) {
            // fully missing feature: impute 0, leave unit scale
            continue;
        }
        std::sort(vals.begin(), vals.end());
        const std::size_t n = vals.size();
        stats.median[f] = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);

        double sum = 0.0;
        for (double v : vals) sum += v;
        stats.mean[f] = sum / n;
        double sq = 0.0;
        for (double v : vals) sq += (v - stats.mean[f]) * (v - stats.mean[f]);
        stats.stddev[f] = std::max(std::sqrt(sq / n), 1e-12);
    }
    return stats;
}

ClinicalRecord apply_standardizer(const StandardizerStats& stats,
                                  const ClinicalRecord& rec) {
    if (rec.features.size() != stats.mean.size()) {
        throw ShapeError("standardizer: record dimensionality mismatch");
    }
    ClinicalRecord out = rec;
    for (std::size_t f = 0; f < out.features.size(); ++f) {
        double v = out.features[f];
        if (std::isnan(v)) v = stats.median[f];
        out.features[f] = (v - stats.mean[f]) / stats.stddev[f];
    }
    return out;
}

}  // namespace mieval::clinical
