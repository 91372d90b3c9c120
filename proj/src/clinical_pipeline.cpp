#include "mieval/clinical/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "nlohmann/json.hpp"

#include "mieval/rng.hpp"

namespace mieval::clinical {

namespace {

struct Matrix {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

Matrix standardized_matrix(const std::vector<ClinicalRecord>& records,
                           const StandardizerStats& stats) {
    Matrix m;
    for (const auto& rec : records) {
        if (!rec.label) {
            throw DataError("clinical fit: record " + rec.case_id + " has no label");
        }
        m.x.push_back(apply_standardizer(stats, rec).features);
        m.y.push_back(*rec.label);
    }
    return m;
}

std::vector<std::vector<double>> restrict_features(
    const std::vector<std::vector<double>>& x, const std::vector<int>& selected) {
    std::vector<std::vector<double>> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i].reserve(selected.size());
        for (int f : selected) out[i].push_back(x[i][f]);
    }
    return out;
}

/// Mean accuracy of an (C, gamma_scale) cell under inner stratified 3-fold CV.
double grid_cell_accuracy(const std::vector<ClinicalRecord>& train,
                          const SvmHyperparams& hp, double c, double gamma_scale,
                          std::uint64_t seed) {
    std::vector<int> labels;
    for (const auto& r : train) labels.push_back(*r.label);
    const std::vector<int> folds = stratified_folds(labels, 3, seed);

    double total = 0.0;
    int counted = 0;
    for (int fold = 0; fold < 3; ++fold) {
        std::vector<ClinicalRecord> inner_train, inner_val;
        for (std::size_t i = 0; i < train.size(); ++i) {
            (folds[i] == fold ? inner_val : inner_train).push_back(train[i]);
        }
        bool has_pos = false, has_neg = false;
        for (const auto& r : inner_train) {
            (*r.label == kPathological ? has_pos : has_neg) = true;
        }
        if (inner_val.empty() || !has_pos || !has_neg) continue;

        SvmHyperparams cell = hp;
        cell.grid_search = false;
        cell.rbf_c = c;
        const StandardizerStats stats = fit_standardizer(inner_train);
        Matrix m = standardized_matrix(inner_train, stats);
        LinearSvmModel linear =
            train_linear_svm(m.x, m.y, {cell.linear_c, cell.linear_epochs, seed});
        const std::vector<int> selected = select_features(linear, cell.selection_tau);
        const auto xs = restrict_features(m.x, selected);
        RbfSvmConfig rc{c, gamma_scale * default_gamma(xs), cell.kkt_tol, seed};
        const RbfSvmModel rbf = train_rbf_svm(xs, m.y, rc);

        int hits = 0;
        for (const auto& rec : inner_val) {
            const auto std_rec = apply_standardizer(stats, rec);
            std::vector<double> xr;
            for (int f : selected) xr.push_back(std_rec.features[f]);
            const int pred = rbf.decision(xr) >= 0.0 ? kPathological : kNormal;
            hits += pred == *rec.label;
        }
        total += static_cast<double>(hits) / inner_val.size();
        ++counted;
    }
    return counted ? total / counted : 0.0;
}

}  // namespace

ClinicalPipeline fit_clinical_pipeline(const std::vector<ClinicalRecord>& labeled,
                                       const SvmHyperparams& hp, std::uint64_t seed) {
    if (labeled.size() < 2) {
        throw DataError("clinical fit: need at least 2 labeled records");
    }

    double rbf_c = hp.rbf_c;
    double gamma_scale = 1.0;
    bool gamma_from_grid = false;
    if (hp.grid_search) {
        double best = -1.0;
        for (double c : hp.grid_c) {
            for (double gs : hp.grid_gamma_scale) {
                const double acc = grid_cell_accuracy(labeled, hp, c, gs, seed);
                if (acc > best + 1e-12) {
                    best = acc;
                    rbf_c = c;
                    gamma_scale = gs;
                }
            }
        }
        gamma_from_grid = true;
    }

    ClinicalPipeline pipe;
    pipe.stats = fit_standardizer(labeled);
    Matrix m = standardized_matrix(labeled, pipe.stats);
    pipe.linear = train_linear_svm(m.x, m.y, {hp.linear_c, hp.linear_epochs, seed});
    pipe.selected_features = select_features(pipe.linear, hp.selection_tau);

    const auto xs = restrict_features(m.x, pipe.selected_features);
    RbfSvmConfig rc;
    rc.c = rbf_c;
    rc.tol = hp.kkt_tol;
    rc.seed = seed;
    if (gamma_from_grid) {
        rc.gamma = gamma_scale * default_gamma(xs);
    } else {
        rc.gamma = hp.gamma;  // nullopt keeps the in-solver heuristic
    }
    pipe.rbf = train_rbf_svm(xs, m.y, rc);
    pipe.fitted = true;
    return pipe;
}

ClinicalPrediction predict_clinical(const ClinicalPipeline& pipeline,
                                    const ClinicalRecord& record) {
    if (!pipeline.fitted) throw NumericError("clinical pipeline not fitted");
    const ClinicalRecord std_rec = apply_standardizer(pipeline.stats, record);
    std::vector<double> x;
    x.reserve(pipeline.selected_features.size());
    for (int f : pipeline.selected_features) x.push_back(std_rec.features[f]);

    ClinicalPrediction pred;
    pred.decision = pipeline.rbf.decision(x);
    pred.label = pred.decision >= 0.0 ? kPathological : kNormal;
    return pred;
}

namespace {

constexpr int kPipelineFormatVersion = 1;

nlohmann::json vec_json(const std::vector<double>& v) { return nlohmann::json(v); }

}  // namespace

nlohmann::json pipeline_to_json(const ClinicalPipeline& pipeline) {
    if (!pipeline.fitted) throw NumericError("cannot serialize an unfitted pipeline");
    nlohmann::json j;
    j["format_version"] = kPipelineFormatVersion;
    j["standardizer"] = {{"mean", vec_json(pipeline.stats.mean)},
                         {"std", vec_json(pipeline.stats.stddev)},
                         {"median", vec_json(pipeline.stats.median)}};
    j["linear"] = {{"w", vec_json(pipeline.linear.w)},
                   {"b", pipeline.linear.b},
                   {"c", pipeline.linear.c}};
    j["selected_features"] = pipeline.selected_features;
    nlohmann::json sv = nlohmann::json::array();
    for (const auto& v : pipeline.rbf.support_vectors) sv.push_back(vec_json(v));
    j["rbf"] = {{"support_vectors", sv},
                {"alpha_y", vec_json(pipeline.rbf.alpha_y)},
                {"b", pipeline.rbf.b},
                {"gamma", pipeline.rbf.gamma},
                {"c", pipeline.rbf.c}};
    return j;
}

ClinicalPipeline pipeline_from_json(const nlohmann::json& j) {
    if (!j.contains("format_version") || j["format_version"] != kPipelineFormatVersion) {
        throw DataError("clinical pipeline: unsupported format version");
    }
    ClinicalPipeline pipe;
    pipe.stats.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    pipe.stats.stddev = j.at("standardizer").at("std").get<std::vector<double>>();
    pipe.stats.median = j.at("standardizer").at("median").get<std::vector<double>>();
    pipe.linear.w = j.at("linear").at("w").get<std::vector<double>>();
    pipe.linear.b = j.at("linear").at("b").get<double>();
    pipe.linear.c = j.at("linear").at("c").get<double>();
    pipe.linear.trained = true;
    pipe.selected_features = j.at("selected_features").get<std::vector<int>>();
    for (const auto& v : j.at("rbf").at("support_vectors")) {
        pipe.rbf.support_vectors.push_back(v.get<std::vector<double>>());
    }
    pipe.rbf.alpha_y = j.at("rbf").at("alpha_y").get<std::vector<double>>();
    pipe.rbf.b = j.at("rbf").at("b").get<double>();
    pipe.rbf.gamma = j.at("rbf").at("gamma").get<double>();
    pipe.rbf.c = j.at("rbf").at("c").get<double>();
    pipe.rbf.trained = true;
    pipe.fitted = true;
    return pipe;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int k,
                                  std::uint64_t seed) {
    if (k < 2) throw ConfigError("crossval: k must be >= 2");
    std::vector<int> folds(labels.size(), -1);
    for (int cls : {kPathological, kNormal}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) members.push_back(i);
        }
        Rng rng(seed ^ (cls == kPathological ? 0x706174ULL : 0x6e6f72ULL));
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            folds[members[i]] = static_cast<int>(i % k);
        }
    }
    return folds;
}

CrossvalResult crossval_kfold(const std::vector<ClinicalRecord>& records,
                              const SvmHyperparams& hp, std::uint64_t seed, int k) {
    std::vector<int> labels;
    int n_pos = 0, n_neg = 0;
    for (const auto& rec : records) {
        if (!rec.label) {
            throw DataError("crossval: record " + rec.case_id + " has no label");
        }
        labels.push_back(*rec.label);
        (*rec.label == kPathological ? n_pos : n_neg)++;
    }
    if (n_pos < k || n_neg < k) {
        throw DataError("crossval: need at least " + std::to_string(k) +
                        " records per class");
    }

    CrossvalResult result;
    result.fold_assignment = stratified_folds(labels, k, seed);
    for (int fold = 0; fold < k; ++fold) {
        std::vector<ClinicalRecord> train, val;
        for (std::size_t i = 0; i < records.size(); ++i) {
            (result.fold_assignment[i] == fold ? val : train).push_back(records[i]);
        }
        ClinicalPipeline pipe = fit_clinical_pipeline(train, hp, seed + fold);
        int hits = 0;
        for (const auto& rec : val) {
            hits += predict_clinical(pipe, rec).label == *rec.label;
        }
        result.fold_accuracy.push_back(static_cast<double>(hits) / val.size());
        result.fold_selected_features.push_back(pipe.selected_features);
        result.fold_pipelines.push_back(std::move(pipe));
    }
    double total = 0.0;
    for (double a : result.fold_accuracy) total += a;
    result.mean_accuracy = total / k;
    return result;
}

}  // namespace mieval::clinical
