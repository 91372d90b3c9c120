#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mieval/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration (JSON)")
        ->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out_dir, "override the output directory");
}

mieval::RunConfig load(const CommonArgs& args) {
    mieval::RunConfig cfg = mieval::load_run_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"myocardial infarction evaluation pipeline (DE-MRI segmentation, "
                 "clinical + image classification, 3D metrics)"};
    app.require_subcommand(1);

    CommonArgs train_args;
    std::string train_role = "anatomical";
    auto* train = app.add_subcommand("train-seg", "train one segmentation network");
    add_common(train, train_args);
    train->add_option("--role", train_role, "anatomical or pathological")
        ->check(CLI::IsMember({"anatomical", "pathological"}))
        ->required();

    CommonArgs predict_args;
    std::vector<std::string> predict_cases;
    auto* predict = app.add_subcommand("predict", "segment cases with both networks");
    add_common(predict, predict_args);
    predict->add_option("cases", predict_cases, "case ids (default: all)");

    CommonArgs fit_args;
    auto* fit = app.add_subcommand("fit-clinical", "fit the cascaded SVM classifier");
    add_common(fit, fit_args);

    CommonArgs classify_args;
    std::string classify_mode = "both";
    std::string classify_pred_dir;
    auto* classify = app.add_subcommand("classify", "normal/pathological per case");
    add_common(classify, classify_args);
    classify->add_option("--mode", classify_mode, "clinical, image or both")
        ->check(CLI::IsMember({"clinical", "image", "both"}))
        ->required();
    classify->add_option("--pred", classify_pred_dir,
                         "predictions directory (default: <out>/predictions)");

    CommonArgs eval_args;
    std::string eval_pred_dir, eval_gt_dir;
    auto* evaluate = app.add_subcommand("evaluate", "3D DSC/HD/RVD metrics + summary");
    add_common(evaluate, eval_args);
    evaluate->add_option("--pred", eval_pred_dir, "predicted label maps")->required();
    evaluate->add_option("--gt", eval_gt_dir, "ground-truth label maps")->required();

    CommonArgs cv_args;
    auto* crossval = app.add_subcommand("crossval", "5-fold clinical cross-validation");
    add_common(crossval, cv_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const auto cfg = load(train_args);
            const auto hist =
                mieval::pipeline::cmd_train_seg(cfg, mieval::seg::role_from_string(train_role));
            std::printf("trained %s: %zu epochs, best val loss %.6f (epoch %d)\n",
                        train_role.c_str(), hist.epochs.size(), hist.best_val_loss,
                        hist.best_epoch);
        } else if (predict->parsed()) {
            const auto cfg = load(predict_args);
            const auto outputs = mieval::pipeline::cmd_predict(cfg, predict_cases);
            std::printf("wrote %zu predictions under %s\n", outputs.size(),
                        (cfg.out_dir / "predictions").c_str());
        } else if (fit->parsed()) {
            const auto cfg = load(fit_args);
            const auto pipe = mieval::pipeline::cmd_fit_clinical(cfg);
            std::printf("fitted clinical pipeline: %zu features selected, %zu support vectors\n",
                        pipe.selected_features.size(), pipe.rbf.support_vectors.size());
        } else if (classify->parsed()) {
            const auto cfg = load(classify_args);
            const auto result = mieval::pipeline::cmd_classify(
                cfg, mieval::pipeline::classify_mode_from_string(classify_mode),
                classify_pred_dir);
            std::printf("classified %zu cases\n", result.rows.size());
            if (result.clinical_accuracy) {
                std::printf("clinical accuracy: %.4f\n", *result.clinical_accuracy);
            }
            if (result.image_accuracy) {
                std::printf("image accuracy: %.4f\n", *result.image_accuracy);
            }
            if (result.agreement) {
                std::printf("clinical/image agreement: %.4f\n", *result.agreement);
            }
        } else if (evaluate->parsed()) {
            const auto cfg = load(eval_args);
            const auto result = mieval::pipeline::cmd_evaluate(cfg, eval_pred_dir, eval_gt_dir);
            std::printf("evaluated %zu cases", result.cases.size());
            if (result.summary.classification_accuracy) {
                std::printf(", classification accuracy %.4f",
                            *result.summary.classification_accuracy);
            }
            std::printf("\n");
        } else if (crossval->parsed()) {
            const auto cfg = load(cv_args);
            const auto result = mieval::pipeline::cmd_crossval(cfg);
            for (std::size_t f = 0; f < result.fold_accuracy.size(); ++f) {
                std::printf("fold %zu accuracy: %.4f\n", f, result.fold_accuracy[f]);
            }
            std::printf("mean accuracy: %.4f\n", result.mean_accuracy);
        }
    } catch (const mieval::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const mieval::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const mieval::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}
