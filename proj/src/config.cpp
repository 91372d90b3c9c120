#include "mieval/config.hpp"

#include <fstream>

#include "nlohmann/json.hpp"

namespace mieval {

namespace {

using nlohmann::json;

/// json accessor that reports dotted field paths in errors.
struct Cursor {
    const json* j;
    std::string path;

    bool has(const char* key) const { return j->contains(key); }

    Cursor at(const char* key) const {
        if (!j->contains(key)) {
            throw ConfigError("config: missing field '" + join(key) + "'");
        }
        return Cursor{&(*j)[key], join(key)};
    }

    std::optional<Cursor> maybe(const char* key) const {
        if (!j->contains(key)) return std::nullopt;
        return Cursor{&(*j)[key], join(key)};
    }

    template <typename T>
    T as() const {
        try {
            return j->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: field '" + path + "' has the wrong type");
        }
    }

    template <typename T>
    T get_or(const char* key, T fallback) const {
        auto c = maybe(key);
        return c ? c->as<T>() : fallback;
    }

    std::string join(const char* key) const {
        return path.empty() ? key : path + "." + key;
    }
};

clinical::FeatureKind kind_from_string(const std::string& s, const std::string& path) {
    if (s == "binary") return clinical::FeatureKind::Binary;
    if (s == "ordinal") return clinical::FeatureKind::Ordinal;
    if (s == "continuous") return clinical::FeatureKind::Continuous;
    throw ConfigError("config: field '" + path + "' has unknown feature kind '" + s + "'");
}

std::string kind_to_string(clinical::FeatureKind k) {
    switch (k) {
        case clinical::FeatureKind::Binary: return "binary";
        case clinical::FeatureKind::Ordinal: return "ordinal";
        default: return "continuous";
    }
}

io::CaseClass class_from_string(const std::string& s, const std::string& path) {
    if (s == "normal") return io::CaseClass::Normal;
    if (s == "pathological") return io::CaseClass::Pathological;
    throw ConfigError("config: field '" + path + "' has unknown class '" + s + "'");
}

}  // namespace

seg::UNetSpec RunConfig::unet_spec(seg::NetRole role) const {
    const NetConfig& nc =
        role == seg::NetRole::Anatomical ? anatomical : pathological;
    seg::UNetSpec spec;
    spec.in_channels = 1;
    spec.base_features = nc.base_features;
    spec.depth = nc.depth;
    spec.se_reduction = nc.se_reduction;
    spec.num_classes = seg::num_classes_for_role(role);
    spec.input_size = preproc.target_h;
    spec.validate();
    if (preproc.target_w % (1 << spec.depth) != 0) {
        throw ConfigError("config: preproc.target_w not divisible by 2^depth");
    }
    return spec;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    Cursor root{&j, ""};
    RunConfig cfg;

    const Cursor dataset = root.at("dataset");
    cfg.dataset_root = base_dir / dataset.at("root").as<std::string>();
    if (auto layout = dataset.maybe("layout")) {
        cfg.layout.image_path = layout->get_or<std::string>("image_path", cfg.layout.image_path);
        cfg.layout.label_path = layout->get_or<std::string>("label_path", cfg.layout.label_path);
        cfg.layout.clinical_path =
            layout->get_or<std::string>("clinical_path", cfg.layout.clinical_path);
        if (auto prefixes = layout->maybe("class_prefixes")) {
            cfg.layout.class_prefixes.clear();
            for (const auto& [prefix, cls] : prefixes->j->items()) {
                cfg.layout.class_prefixes.emplace_back(
                    prefix, class_from_string(cls.get<std::string>(),
                                              prefixes->path + "." + prefix));
            }
        }
        if (auto csv = layout->maybe("clinical_csv")) {
            cfg.layout.clinical_csv = csv->as<std::string>();
        }
    }

    if (auto schema = root.maybe("clinical_schema")) {
        cfg.schema.strict = schema->get_or<bool>("strict", true);
        if (auto feats = schema->maybe("features")) {
            cfg.schema.features.clear();
            int i = 0;
            for (const auto& f : *feats->j) {
                Cursor fc{&f, feats->path + "[" + std::to_string(i++) + "]"};
                clinical::FeatureSpec spec;
                spec.key = fc.at("key").as<std::string>();
                spec.kind = kind_from_string(fc.get_or<std::string>("kind", "continuous"),
                                             fc.path);
                if (auto mapping = fc.maybe("mapping")) {
                    for (const auto& [k, v] : mapping->j->items()) {
                        spec.mapping[k] = v.get<double>();
                    }
                }
                cfg.schema.features.push_back(std::move(spec));
            }
        }
    }

    if (auto pp = root.maybe("preproc")) {
        cfg.preproc.target_h = pp->get_or<int>("target_h", cfg.preproc.target_h);
        cfg.preproc.target_w = pp->get_or<int>("target_w", cfg.preproc.target_w);
        cfg.preproc.epsilon_std = pp->get_or<double>("epsilon_std", cfg.preproc.epsilon_std);
        cfg.preproc.validate();
    }

    auto parse_net = [&](const char* key, RunConfig::NetConfig& nc) {
        if (auto net = root.maybe(key)) {
            nc.base_features = net->get_or<int>("base_features", nc.base_features);
            nc.depth = net->get_or<int>("depth", nc.depth);
            nc.se_reduction = net->get_or<int>("se_reduction", nc.se_reduction);
        }
    };
    parse_net("anatomical", cfg.anatomical);
    parse_net("pathological", cfg.pathological);

    if (auto train = root.maybe("train")) {
        cfg.train.max_epochs = train->get_or<int>("max_epochs", cfg.train.max_epochs);
        cfg.train.lr = train->get_or<double>("lr", cfg.train.lr);
        cfg.train.early_stop_patience =
            train->get_or<int>("early_stop_patience", cfg.train.early_stop_patience);
        cfg.train.batch_size = train->get_or<int>("batch_size", cfg.train.batch_size);
        cfg.train.dice_include_background = train->get_or<bool>(
            "dice_include_background", cfg.train.dice_include_background);
        cfg.train.validate();
    }

    if (auto split = root.maybe("split")) {
        cfg.split.n_val = split->get_or<int>("n_val", cfg.split.n_val);
        cfg.split.val_pathological =
            split->get_or<int>("val_pathological", cfg.split.val_pathological);
        cfg.split.val_normal = split->get_or<int>("val_normal", cfg.split.val_normal);
    }

    if (auto svm = root.maybe("svm")) {
        cfg.svm.linear_c = svm->get_or<double>("linear_c", cfg.svm.linear_c);
        cfg.svm.linear_epochs = svm->get_or<int>("linear_epochs", cfg.svm.linear_epochs);
        cfg.svm.selection_tau = svm->get_or<double>("tau", cfg.svm.selection_tau);
        cfg.svm.rbf_c = svm->get_or<double>("rbf_c", cfg.svm.rbf_c);
        if (auto gamma = svm->maybe("gamma")) {
            if (gamma->j->is_number()) {
                cfg.svm.gamma = gamma->as<double>();
            } else if (gamma->as<std::string>() != "auto") {
                throw ConfigError("config: field 'svm.gamma' must be a number or \"auto\"");
            }
        }
        cfg.svm.grid_search = svm->get_or<bool>("grid_search", cfg.svm.grid_search);
    }

    if (auto rule = root.maybe("slice_rule")) {
        cfg.slice_rule.min_pathological_slices = rule->get_or<int>(
            "min_pathological_slices", cfg.slice_rule.min_pathological_slices);
        cfg.slice_rule.min_pixels_per_slice =
            rule->get_or<int>("min_pixels_per_slice", cfg.slice_rule.min_pixels_per_slice);
        cfg.slice_rule.validate();
    }

    cfg.seed = root.at("seed").as<std::uint64_t>();
    cfg.out_dir = base_dir / root.at("out_dir").as<std::string>();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

std::string canonical_config(const RunConfig& cfg) {
    json j;
    j["dataset"]["root"] = cfg.dataset_root.string();
    j["dataset"]["layout"]["image_path"] = cfg.layout.image_path;
    j["dataset"]["layout"]["label_path"] = cfg.layout.label_path;
    j["dataset"]["layout"]["clinical_path"] = cfg.layout.clinical_path;
    for (const auto& [prefix, cls] : cfg.layout.class_prefixes) {
        j["dataset"]["layout"]["class_prefixes"][prefix] = io::to_string(cls);
    }
    if (cfg.layout.clinical_csv) {
        j["dataset"]["layout"]["clinical_csv"] = *cfg.layout.clinical_csv;
    }
    j["clinical_schema"]["strict"] = cfg.schema.strict;
    for (const auto& f : cfg.schema.features) {
        json jf;
        jf["key"] = f.key;
        jf["kind"] = kind_to_string(f.kind);
        for (const auto& [k, v] : f.mapping) jf["mapping"][k] = v;
        j["clinical_schema"]["features"].push_back(jf);
    }
    j["preproc"] = {{"target_h", cfg.preproc.target_h},
                    {"target_w", cfg.preproc.target_w},
                    {"epsilon_std", cfg.preproc.epsilon_std}};
    auto net_json = [](const RunConfig::NetConfig& nc) {
        return json{{"base_features", nc.base_features},
                    {"depth", nc.depth},
                    {"se_reduction", nc.se_reduction}};
    };
    j["anatomical"] = net_json(cfg.anatomical);
    j["pathological"] = net_json(cfg.pathological);
    j["train"] = {{"max_epochs", cfg.train.max_epochs},
                  {"lr", cfg.train.lr},
                  {"early_stop_patience", cfg.train.early_stop_patience},
                  {"batch_size", cfg.train.batch_size},
                  {"dice_include_background", cfg.train.dice_include_background}};
    j["split"] = {{"n_val", cfg.split.n_val},
                  {"val_pathological", cfg.split.val_pathological},
                  {"val_normal", cfg.split.val_normal}};
    j["svm"] = {{"linear_c", cfg.svm.linear_c},
                {"linear_epochs", cfg.svm.linear_epochs},
                {"tau", cfg.svm.selection_tau},
                {"rbf_c", cfg.svm.rbf_c},
                {"grid_search", cfg.svm.grid_search}};
    if (cfg.svm.gamma) j["svm"]["gamma"] = *cfg.svm.gamma;
    else j["svm"]["gamma"] = "auto";
    j["slice_rule"] = {
        {"min_pathological_slices", cfg.slice_rule.min_pathological_slices},
        {"min_pixels_per_slice", cfg.slice_rule.min_pixels_per_slice}};
    j["seed"] = cfg.seed;
    return j.dump();
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (char c : data) {
        hash ^= static_cast<std::uint8_t>(c);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
    return buf;
}

}  // namespace mieval
