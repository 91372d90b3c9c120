#include "mieval/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "nlohmann/json.hpp"

#include "mieval/clinical/pipeline.hpp"
#include "mieval/metrics.hpp"
#include "mieval/nifti.hpp"
#include "mieval/preproc.hpp"
#include "mieval/slice_rule.hpp"

namespace mieval::pipeline {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["outputs"] = outputs;  // relative to the run directory
    write_text_file(cfg.out_dir / ("manifest_" + command + ".json"), j.dump(2) + "\n");
}

fs::path checkpoint_path(const RunConfig& cfg, seg::NetRole role) {
    return cfg.out_dir / "checkpoints" / (seg::to_string(role) + ".ckpt");
}

Volume load_image(const io::CaseEntry& entry) {
    return io::read_nifti_volume_file(entry.image_path, entry.case_id);
}

LabelMap load_labels(const io::CaseEntry& entry) {
    if (!entry.label_path) {
        throw DataError("case " + entry.case_id + ": no ground-truth label file");
    }
    return io::read_nifti_labels_file(*entry.label_path);
}

/// case id from "<id>.nii" / "<id>.nii.gz"
std::string case_id_from_path(const fs::path& p) {
    fs::path stem = p.stem();
    if (stem.extension() == ".nii") stem = stem.stem();
    return stem.string();
}

std::map<std::string, fs::path> index_nifti_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw DataError(dir.string() + " is not a directory");
    }
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path p = entry.path();
        if (p.extension() == ".nii" ||
            (p.extension() == ".gz" && p.stem().extension() == ".nii")) {
            out[case_id_from_path(p)] = p;
        }
    }
    return out;
}

}  // namespace

ClassifyMode classify_mode_from_string(const std::string& s) {
    if (s == "clinical") return ClassifyMode::Clinical;
    if (s == "image") return ClassifyMode::Image;
    if (s == "both") return ClassifyMode::Both;
    throw ConfigError("unknown classify mode \"" + s + "\"");
}

void write_text_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>{});
}

seg::TrainCase prepare_case(const io::CaseEntry& entry, const RunConfig& cfg,
                            seg::NetRole role) {
    const Volume image = preprocess_case(load_image(entry), cfg.preproc);
    const LabelMap native = load_labels(entry);
    const LabelMap resized = resize_labels(native, cfg.preproc);
    return seg::TrainCase{image, seg::map_labels_for_role(resized, role)};
}

seg::TrainHistory cmd_train_seg(const RunConfig& cfg, seg::NetRole role) {
    const io::DatasetIndex idx = io::load_dataset(cfg.dataset_root, cfg.layout);
    auto [train_idx, val_idx] = split_dataset(idx, cfg.split.n_val,
                                              cfg.split.val_pathological,
                                              cfg.split.val_normal, cfg.seed);

    std::vector<seg::TrainCase> train_cases, val_cases;
    for (const auto& entry : train_idx.cases) {
        train_cases.push_back(prepare_case(entry, cfg, role));
    }
    for (const auto& entry : val_idx.cases) {
        val_cases.push_back(prepare_case(entry, cfg, role));
    }

    seg::SegModel<float> model =
        seg::build_seg_model<float>(role, cfg.unet_spec(role), cfg.seed);
    seg::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    nn::AdamState<float> adam;
    const seg::TrainHistory hist =
        seg::train_unet(model.net, train_cases, val_cases, tc, &adam);

    fs::create_directories(cfg.out_dir / "checkpoints");
    nn::write_checkpoint_file(checkpoint_path(cfg, role),
                              seg::model_to_checkpoint<float>(model, &adam));

    std::string csv = "epoch,train_loss,val_loss\n";
    for (const auto& e : hist.epochs) {
        csv += std::to_string(e.epoch) + "," + fmt(e.train_loss) + "," +
               fmt(e.val_loss) + "\n";
    }
    const std::string history_name = "history_" + seg::to_string(role) + ".csv";
    write_text_file(cfg.out_dir / history_name, csv);

    write_manifest(cfg, "train-seg-" + seg::to_string(role),
                   {"checkpoints/" + seg::to_string(role) + ".ckpt", history_name});
    return hist;
}

std::vector<std::string> cmd_predict(const RunConfig& cfg,
                                     std::vector<std::string> case_ids) {
    for (seg::NetRole role : {seg::NetRole::Anatomical, seg::NetRole::Pathological}) {
        if (!fs::exists(checkpoint_path(cfg, role))) {
            throw DataError("missing checkpoint " + checkpoint_path(cfg, role).string());
        }
    }
    seg::SegModel<float> anat = seg::model_from_checkpoint<float>(
        nn::read_checkpoint_file(checkpoint_path(cfg, seg::NetRole::Anatomical)));
    seg::SegModel<float> path = seg::model_from_checkpoint<float>(
        nn::read_checkpoint_file(checkpoint_path(cfg, seg::NetRole::Pathological)));

    const io::DatasetIndex idx = io::load_dataset(cfg.dataset_root, cfg.layout);
    if (case_ids.empty()) {
        for (const auto& entry : idx.cases) case_ids.push_back(entry.case_id);
    }

    fs::create_directories(cfg.out_dir / "predictions");
    std::vector<std::string> outputs;
    for (const std::string& id : case_ids) {
        const io::CaseEntry* entry = idx.find(id);
        if (!entry) throw DataError("predict: unknown case id \"" + id + "\"");

        const Volume native = load_image(*entry);
        const Volume input = preprocess_case(native, cfg.preproc);
        const LabelMap anat_pred = seg::predict_case(anat.net, input);
        const LabelMap path_pred = seg::predict_case(path.net, input);
        const LabelMap merged = seg::refine_and_merge(anat_pred, path_pred);

        // back to the native in-plane grid, with the native spacing
        LabelMap native_grid =
            resize_labels_to(merged, native.shape().h, native.shape().w);
        LabelMap final_map(native.shape(), native.spacing(),
                           std::vector<std::uint8_t>(native_grid.labels()));

        const std::string name = id + ".nii.gz";
        io::write_nifti_file(final_map, cfg.out_dir / "predictions" / name);
        outputs.push_back("predictions/" + name);
    }
    write_manifest(cfg, "predict", outputs);
    return outputs;
}

std::vector<clinical::ClinicalRecord> load_clinical_records(const RunConfig& cfg,
                                                            const io::DatasetIndex& idx) {
    std::vector<clinical::ClinicalRecord> records;
    if (cfg.layout.clinical_csv) {
        const fs::path csv_path = idx.root / *cfg.layout.clinical_csv;
        const auto raws = io::parse_clinical_csv(read_text_file(csv_path));
        for (const auto& raw : raws) {
            const io::CaseEntry* entry = idx.find(raw.case_id);
            const auto truth = entry ? entry->truth : io::CaseClass::Unknown;
            records.push_back(clinical::encode_record(raw, cfg.schema, truth));
        }
    } else {
        for (const auto& entry : idx.cases) {
            if (!entry.clinical_path) continue;
            const auto raw = io::parse_clinical_text(read_text_file(*entry.clinical_path),
                                                     entry.case_id);
            records.push_back(clinical::encode_record(raw, cfg.schema, entry.truth));
        }
    }
    return records;
}

clinical::ClinicalPipeline cmd_fit_clinical(const RunConfig& cfg) {
    const io::DatasetIndex idx = io::load_dataset(cfg.dataset_root, cfg.layout);
    std::vector<clinical::ClinicalRecord> labeled;
    for (auto& rec : load_clinical_records(cfg, idx)) {
        if (rec.label) labeled.push_back(std::move(rec));
    }
    if (labeled.empty()) {
        throw DataError("fit-clinical: no labeled clinical records in the dataset");
    }
    clinical::ClinicalPipeline pipe =
        clinical::fit_clinical_pipeline(labeled, cfg.svm, cfg.seed);
    write_text_file(cfg.out_dir / "clinical_pipeline.json",
                    clinical::pipeline_to_json(pipe).dump(2) + "\n");
    write_manifest(cfg, "fit-clinical", {"clinical_pipeline.json"});
    return pipe;
}

ClassifyResult cmd_classify(const RunConfig& cfg, ClassifyMode mode,
                            const fs::path& predictions_dir) {
    const io::DatasetIndex idx = io::load_dataset(cfg.dataset_root, cfg.layout);
    const bool want_clinical = mode != ClassifyMode::Image;
    const bool want_image = mode != ClassifyMode::Clinical;

    std::map<std::string, ClassifyRow> rows;
    for (const auto& entry : idx.cases) {
        ClassifyRow row;
        row.case_id = entry.case_id;
        row.truth = entry.truth;
        rows[entry.case_id] = row;
    }

    if (want_clinical) {
        const fs::path pipe_path = cfg.out_dir / "clinical_pipeline.json";
        if (!fs::exists(pipe_path)) {
            throw DataError("classify: fitted pipeline missing at " + pipe_path.string() +
                            " (run fit-clinical first)");
        }
        const auto pipe = clinical::pipeline_from_json(
            nlohmann::json::parse(read_text_file(pipe_path)));
        for (const auto& rec : load_clinical_records(cfg, idx)) {
            auto it = rows.find(rec.case_id);
            if (it == rows.end()) continue;
            const auto pred = clinical::predict_clinical(pipe, rec);
            it->second.clinical_pred = pred.label == clinical::kPathological
                                           ? io::CaseClass::Pathological
                                           : io::CaseClass::Normal;
            it->second.clinical_decision = pred.decision;
        }
    }

    if (want_image) {
        const fs::path dir =
            predictions_dir.empty() ? cfg.out_dir / "predictions" : predictions_dir;
        for (const auto& [id, path] : index_nifti_dir(dir)) {
            auto it = rows.find(id);
            if (it == rows.end()) continue;
            const LabelMap lm = io::read_nifti_labels_file(path);
            it->second.image_pred =
                classify_from_segmentation(lm, cfg.slice_rule).label;
        }
    }

    ClassifyResult result;
    std::vector<io::CaseClass> ct, cp, it_, ip;
    int agree = 0, both = 0;
    for (auto& [id, row] : rows) {
        const bool has_clinical = row.clinical_pred != io::CaseClass::Unknown;
        const bool has_image = row.image_pred != io::CaseClass::Unknown;
        if (!has_clinical && !has_image) continue;
        result.rows.push_back(row);
        if (has_clinical && row.truth != io::CaseClass::Unknown) {
            cp.push_back(row.clinical_pred);
            ct.push_back(row.truth);
        }
        if (has_image && row.truth != io::CaseClass::Unknown) {
            ip.push_back(row.image_pred);
            it_.push_back(row.truth);
        }
        if (has_clinical && has_image) {
            ++both;
            agree += row.clinical_pred == row.image_pred;
        }
    }
    if (!cp.empty()) result.clinical_accuracy = metrics::accuracy(cp, ct);
    if (!ip.empty()) result.image_accuracy = metrics::accuracy(ip, it_);
    if (mode == ClassifyMode::Both && both > 0) {
        result.agreement = static_cast<double>(agree) / both;
    }

    std::string csv = "case_id,clinical_prediction,clinical_decision,image_prediction,truth\n";
    for (const auto& row : result.rows) {
        csv += row.case_id + ",";
        csv += (row.clinical_pred == io::CaseClass::Unknown
                    ? ""
                    : io::to_string(row.clinical_pred)) +
               ",";
        csv += (row.clinical_pred == io::CaseClass::Unknown
                    ? ""
                    : fmt(row.clinical_decision)) +
               ",";
        csv += (row.image_pred == io::CaseClass::Unknown ? ""
                                                         : io::to_string(row.image_pred)) +
               ",";
        csv += (row.truth == io::CaseClass::Unknown ? "" : io::to_string(row.truth)) + "\n";
    }
    if (result.clinical_accuracy) {
        csv += "# clinical_accuracy," + fmt(*result.clinical_accuracy) + "\n";
    }
    if (result.image_accuracy) {
        csv += "# image_accuracy," + fmt(*result.image_accuracy) + "\n";
    }
    if (result.agreement) csv += "# agreement," + fmt(*result.agreement) + "\n";

    const std::string mode_name = mode == ClassifyMode::Clinical ? "clinical"
                                  : mode == ClassifyMode::Image  ? "image"
                                                                 : "both";
    const std::string name = "classification_" + mode_name + ".csv";
    write_text_file(cfg.out_dir / name, csv);
    write_manifest(cfg, "classify-" + mode_name, {name});
    return result;
}

EvaluateResult cmd_evaluate(const RunConfig& cfg, const fs::path& predictions_dir,
                            const fs::path& ground_truth_dir) {
    const auto preds = index_nifti_dir(predictions_dir);
    const auto gts = index_nifti_dir(ground_truth_dir);

    std::vector<std::string> unmatched;
    for (const auto& [id, p] : preds) {
        if (!gts.count(id)) unmatched.push_back("prediction " + id);
    }
    for (const auto& [id, p] : gts) {
        if (!preds.count(id)) unmatched.push_back("ground truth " + id);
    }
    if (!unmatched.empty()) {
        std::string msg = "evaluate: unmatched cases:";
        for (const auto& u : unmatched) msg += " " + u;
        throw DataError(msg);
    }
    if (preds.empty()) throw DataError("evaluate: no cases found");

    EvaluateResult result;
    for (const auto& [id, path] : preds) {
        const LabelMap pred = io::read_nifti_labels_file(path);
        const LabelMap gt = io::read_nifti_labels_file(gts.at(id));
        result.cases.push_back(metrics::evaluate_case(
            id, pred, gt, cfg.slice_rule.min_pathological_slices,
            cfg.slice_rule.min_pixels_per_slice));
    }
    result.summary = metrics::summarize(result.cases);

    write_text_file(cfg.out_dir / "evaluate_cases.csv",
                    metrics::case_reports_csv(result.cases));
    write_text_file(cfg.out_dir / "evaluate_summary.json",
                    metrics::summary_to_json(result.summary).dump(2) + "\n");
    write_manifest(cfg, "evaluate", {"evaluate_cases.csv", "evaluate_summary.json"});
    return result;
}

clinical::CrossvalResult cmd_crossval(const RunConfig& cfg) {
    const io::DatasetIndex idx = io::load_dataset(cfg.dataset_root, cfg.layout);
    std::vector<clinical::ClinicalRecord> labeled;
    for (auto& rec : load_clinical_records(cfg, idx)) {
        if (rec.label) labeled.push_back(std::move(rec));
    }
    const clinical::CrossvalResult result =
        clinical::crossval_kfold(labeled, cfg.svm, cfg.seed, 5);

    std::string csv = "fold,accuracy,selected_features\n";
    for (std::size_t f = 0; f < result.fold_accuracy.size(); ++f) {
        std::string feats;
        for (int idx_f : result.fold_selected_features[f]) {
            if (!feats.empty()) feats += "|";
            feats += cfg.schema.features[idx_f].key;
        }
        csv += std::to_string(f) + "," + fmt(result.fold_accuracy[f]) + "," + feats + "\n";
    }
    csv += "mean," + fmt(result.mean_accuracy) + ",\n";
    write_text_file(cfg.out_dir / "crossval.csv", csv);
    write_manifest(cfg, "crossval", {"crossval.csv"});
    return result;
}

}  // namespace mieval::pipeline
