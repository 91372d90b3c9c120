#include "mieval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nlohmann/json.hpp"

#include "mieval/metrics.hpp"
#include "mieval/slice_rule.hpp"

namespace mieval::metrics {

std::string to_string(Structure s) {
    switch (s) {
        case Structure::Cavity: return "lv_cavity";
        case Structure::Myocardium: return "myocardium";
        case Structure::Infarction: return "infarction";
        case Structure::NoReflow: return "no_reflow";
    }
    return "?";
}

std::vector<int> structure_labels(Structure s) {
    switch (s) {
        case Structure::Cavity: return {kCavity};
        case Structure::Myocardium: return {kMyocardium, kInfarction, kNoReflow};
        case Structure::Infarction: return {kInfarction};
        case Structure::NoReflow: return {kNoReflow};
    }
    return {};
}

StructureMask structure_mask(const LabelMap& lm, Structure s) {
    return extract_mask(lm, structure_labels(s));
}

std::string to_string(MetricKind m) {
    switch (m) {
        case MetricKind::Dsc: return "dsc";
        case MetricKind::HdMm: return "hd_mm";
        case MetricKind::Rvd: return "rvd";
    }
    return "?";
}

std::optional<double> MetricTriple::get(MetricKind m) const {
    switch (m) {
        case MetricKind::Dsc: return dsc;
        case MetricKind::HdMm: return hd_mm;
        case MetricKind::Rvd: return rvd;
    }
    return std::nullopt;
}

SummaryReport summarize(const std::vector<CaseReport>& reports, bool sample_std) {
    if (reports.empty()) throw DataError("summarize: no case reports");
    SummaryReport summary;
    summary.n_cases = static_cast<int>(reports.size());

    for (Structure st : kAllStructures) {
        for (MetricKind mk : kAllMetrics) {
            std::vector<double> values;
            int missing = 0;
            for (const auto& rep : reports) {
                const auto it = rep.per_structure.find(st);
                const std::optional<double> v =
                    it == rep.per_structure.end() ? std::nullopt : it->second.get(mk);
                if (v) {
                    values.push_back(*v);
                } else {
                    ++missing;
                }
            }
            MetricSummary ms;
            ms.n = static_cast<int>(values.size());
            ms.n_missing = missing;
            if (!values.empty()) {
                double sum = 0.0;
                for (double v : values) sum += v;
                ms.mean = sum / values.size();
                double sq = 0.0;
                for (double v : values) sq += (v - ms.mean) * (v - ms.mean);
                const std::size_t denom =
                    sample_std && values.size() > 1 ? values.size() - 1 : values.size();
                ms.stddev = values.size() > 1 ? std::sqrt(sq / denom) : 0.0;
                ms.min = *std::min_element(values.begin(), values.end());
                ms.max = *std::max_element(values.begin(), values.end());
            }
            summary.per_structure[st][mk] = ms;
        }
    }

    std::vector<io::CaseClass> preds, truths;
    for (const auto& rep : reports) {
        if (rep.predicted != io::CaseClass::Unknown &&
            rep.truth != io::CaseClass::Unknown) {
            preds.push_back(rep.predicted);
            truths.push_back(rep.truth);
        }
    }
    if (!preds.empty()) {
        summary.classification_accuracy = accuracy(preds, truths);
    }
    return summary;
}

CaseReport evaluate_case(const std::string& case_id, const LabelMap& prediction,
                         const LabelMap& ground_truth, int min_pathological_slices,
                         int min_pixels_per_slice) {
    if (prediction.shape() != ground_truth.shape()) {
        throw ShapeError("evaluate: prediction/ground-truth grids differ for " + case_id);
    }

    CaseReport rep;
    rep.case_id = case_id;
    for (Structure st : kAllStructures) {
        const StructureMask pm = structure_mask(prediction, st);
        const StructureMask gm = structure_mask(ground_truth, st);
        MetricTriple t;
        t.dsc = dice3d(pm, gm);
        t.hd_mm = hausdorff3d_mm(pm, gm);
        t.rvd = rvd(pm, gm);
        rep.per_structure[st] = t;
    }

    SliceRuleConfig rule{min_pathological_slices, min_pixels_per_slice};
    rep.predicted = classify_from_segmentation(prediction, rule).label;
    // Ground truth is definitive: any annotated pathology voxel makes the
    // case pathological, independent of the prediction-side slice rule.
    rep.truth = structure_mask(ground_truth, Structure::Infarction).count() +
                            structure_mask(ground_truth, Structure::NoReflow).count() >
                        0
                    ? io::CaseClass::Pathological
                    : io::CaseClass::Normal;
    return rep;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", *v);
    return buf;
}

}  // namespace

std::string case_reports_csv(const std::vector<CaseReport>& reports) {
    std::string out = "case_id,structure,dsc,hd_mm,rvd,predicted_class,truth_class\n";
    for (const auto& rep : reports) {
        for (Structure st : kAllStructures) {
            const auto it = rep.per_structure.find(st);
            const MetricTriple t =
                it == rep.per_structure.end() ? MetricTriple{} : it->second;
            out += rep.case_id + "," + to_string(st) + "," + fmt_opt(t.dsc) + "," +
                   fmt_opt(t.hd_mm) + "," + fmt_opt(t.rvd) + "," +
                   io::to_string(rep.predicted) + "," + io::to_string(rep.truth) + "\n";
        }
    }
    return out;
}

nlohmann::json summary_to_json(const SummaryReport& summary) {
    nlohmann::json j;
    j["n_cases"] = summary.n_cases;
    for (const auto& [st, metrics] : summary.per_structure) {
        nlohmann::json& js = j["structures"][to_string(st)];
        for (const auto& [mk, ms] : metrics) {
            nlohmann::json& jm = js[to_string(mk)];
            jm["n"] = ms.n;
            jm["n_missing"] = ms.n_missing;
            if (ms.n > 0) {
                jm["mean"] = ms.mean;
                jm["std"] = ms.stddev;
                jm["min"] = ms.min;
                jm["max"] = ms.max;
            } else {
                jm["missing"] = true;
            }
        }
    }
    if (summary.classification_accuracy) {
        j["classification_accuracy"] = *summary.classification_accuracy;
    }
    return j;
}

}  // namespace mieval::metrics
