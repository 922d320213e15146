// Command-line front end: train / predict / evaluate / inspect.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "roadseg/featext.hpp"
#include "roadseg/forest.hpp"
#include "roadseg/parallel.hpp"
#include "roadseg/pipeline.hpp"
#include "roadseg/raster.hpp"

namespace fs = std::filesystem;
using namespace roadseg;

namespace {

struct RunConfig {
    std::string dataset_root;
    std::string kernel_bank;
    std::vector<int> scales{400, 800, 1200};
    int trees = 10;
    int depth = 10;
    int candidates = 10;
    int min_samples_leaf = 10;
    double svm_c = 0.5;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    int threads = 0;  // 0 -> logical cores
    bool prior = true;
};

std::vector<int> parse_scales(const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset_root")
        cfg.dataset_root = value;
    else if (key == "kernel_bank")
        cfg.kernel_bank = value;
    else if (key == "scales")
        cfg.scales = parse_scales(value);
    else if (key == "trees")
        cfg.trees = std::stoi(value);
    else if (key == "depth")
        cfg.depth = std::stoi(value);
    else if (key == "candidates")
        cfg.candidates = std::stoi(value);
    else if (key == "min_samples_leaf")
        cfg.min_samples_leaf = std::stoi(value);
    else if (key == "svm_c")
        cfg.svm_c = std::stod(value);
    else if (key == "seed")
        cfg.seed = std::stoull(value);
    else if (key == "output_dir")
        cfg.output_dir = value;
    else if (key == "threads")
        cfg.threads = std::stoi(value);
    else if (key == "prior") {
        if (value != "on" && value != "off")
            throw std::runtime_error("config key 'prior' must be on or off");
        cfg.prior = value == "on";
    } else {
        throw std::runtime_error("unknown config key '" + key + "'");
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        apply_key(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

std::string scales_to_string(const std::vector<int>& scales) {
    std::string out;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(scales[i]);
    }
    return out;
}

void write_manifest(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << "dataset_root=" << cfg.dataset_root << "\n";
    out << "kernel_bank=" << cfg.kernel_bank << "\n";
    out << "scales=" << scales_to_string(cfg.scales) << "\n";
    out << "trees=" << cfg.trees << "\n";
    out << "depth=" << cfg.depth << "\n";
    out << "candidates=" << cfg.candidates << "\n";
    out << "min_samples_leaf=" << cfg.min_samples_leaf << "\n";
    out << "svm_c=" << cfg.svm_c << "\n";
    out << "seed=" << cfg.seed << "\n";
    out << "output_dir=" << cfg.output_dir << "\n";
    out << "threads=" << cfg.threads << "\n";
    out << "prior=" << (cfg.prior ? "on" : "off") << "\n";
}

ForestConfig forest_config_from(const RunConfig& cfg) {
    ForestConfig fc;
    fc.num_trees = cfg.trees;
    fc.max_depth = cfg.depth;
    fc.num_candidates = cfg.candidates;
    fc.min_samples_leaf = cfg.min_samples_leaf;
    fc.seed = cfg.seed;
    fc.svm.c = cfg.svm_c;
    fc.svm.seed = cfg.seed;
    return fc;
}

// Prior is stored as a single-channel FSTK plane.
void save_prior(const PriorMask& prior, const std::string& path) {
    FeatureStack stack;
    stack.width = prior.width;
    stack.height = prior.height;
    stack.channels = 1;
    stack.data = prior.data;
    export_feature_stack(stack, path);
}

PriorMask load_prior(const std::string& path) {
    FeatureStack stack = import_feature_stack(path);
    PriorMask prior;
    prior.width = stack.width;
    prior.height = stack.height;
    prior.data = std::move(stack.data);
    return prior;
}

int cmd_train(const RunConfig& cfg) {
    if (cfg.kernel_bank.empty())
        throw std::runtime_error("config key 'kernel_bank' is required");
    if (cfg.dataset_root.empty())
        throw std::runtime_error("config key 'dataset_root' is required");
    set_num_threads(cfg.threads);
    KernelBank bank = load_kernel_bank(cfg.kernel_bank);
    DatasetIndex index = load_dataset_index(cfg.dataset_root, "train");
    ScaleSet scales{cfg.scales};
    TrainedPipeline trained = train_pipeline(index, bank, scales, forest_config_from(cfg));
    fs::create_directories(cfg.output_dir);
    for (std::size_t s = 0; s < scales.counts.size(); ++s) {
        fs::path p = fs::path(cfg.output_dir) /
                     ("forest_" + std::to_string(scales.counts[s]) + ".rfle");
        save_model(trained.models[s], p.string());
    }
    save_prior(trained.prior, (fs::path(cfg.output_dir) / "prior.fstk").string());
    write_manifest(cfg, (fs::path(cfg.output_dir) / "manifest.txt").string());
    std::cout << "trained " << scales.counts.size() << " scale models on "
              << index.pairs.size() << " images -> " << cfg.output_dir << "\n";
    return 0;
}

struct Bundle {
    RunConfig cfg;
    std::vector<ForestModel> models;
    PriorMask prior;
    KernelBank bank;
};

Bundle load_bundle(const std::string& model_dir) {
    Bundle bundle;
    fs::path manifest = fs::path(model_dir) / "manifest.txt";
    if (!fs::exists(manifest))
        throw std::runtime_error("missing bundle piece: " + manifest.string());
    bundle.cfg = load_run_config(manifest.string());
    for (int scale : bundle.cfg.scales) {
        fs::path p = fs::path(model_dir) / ("forest_" + std::to_string(scale) + ".rfle");
        if (!fs::exists(p)) throw std::runtime_error("missing bundle piece: " + p.string());
        bundle.models.push_back(load_model(p.string()));
    }
    fs::path prior_path = fs::path(model_dir) / "prior.fstk";
    if (!fs::exists(prior_path))
        throw std::runtime_error("missing bundle piece: " + prior_path.string());
    bundle.prior = load_prior(prior_path.string());
    if (bundle.cfg.kernel_bank.empty() || !fs::exists(bundle.cfg.kernel_bank))
        throw std::runtime_error("missing bundle piece: kernel bank '" +
                                 bundle.cfg.kernel_bank + "'");
    bundle.bank = load_kernel_bank(bundle.cfg.kernel_bank);
    return bundle;
}

std::vector<std::string> collect_images(const std::string& images_arg) {
    std::vector<std::string> paths;
    if (fs::is_directory(images_arg)) {
        for (const auto& entry : fs::directory_iterator(images_arg)) {
            std::string ext = entry.path().extension().string();
            if (ext == ".ppm" || ext == ".pgm") paths.push_back(entry.path().string());
        }
        std::sort(paths.begin(), paths.end());
    } else {
        std::ifstream in(images_arg);
        if (!in) throw std::runtime_error("cannot open image list: " + images_arg);
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
                line.pop_back();
            if (!line.empty()) paths.push_back(line);
        }
    }
    if (paths.empty()) throw std::runtime_error("no input images in " + images_arg);
    return paths;
}

int cmd_predict(const std::string& model_dir, const std::string& images_arg,
                const std::string& out_dir, bool debug, int threads) {
    Bundle bundle = load_bundle(model_dir);
    set_num_threads(threads >= 0 ? threads : bundle.cfg.threads);
    std::vector<std::string> images = collect_images(images_arg);
    fs::create_directories(out_dir);
    ScaleSet scales{bundle.cfg.scales};
    PriorMask unit_prior;  // prior=off keeps the pooled map untouched
    for (const std::string& path : images) {
        Image image = load_image(path);
        std::vector<ConfidenceMap> per_scale;
        const PriorMask* prior = &bundle.prior;
        if (!bundle.cfg.prior) {
            unit_prior.width = image.width;
            unit_prior.height = image.height;
            unit_prior.data.assign(
                static_cast<std::size_t>(image.width) * image.height, 1.f);
            prior = &unit_prior;
        }
        ConfidenceMap conf = predict_image(image, bundle.bank, bundle.models, scales,
                                           *prior, debug ? &per_scale : nullptr);
        std::string stem = fs::path(path).stem().string();
        save_confidence(conf, (fs::path(out_dir) / (stem + "_conf.pgm")).string());
        if (debug)
            for (std::size_t s = 0; s < per_scale.size(); ++s)
                save_confidence(per_scale[s],
                                (fs::path(out_dir) /
                                 (stem + "_scale" + std::to_string(scales.counts[s]) + ".pgm"))
                                    .string());
        Image ov = overlay(image, conf);
        save_image(ov, (fs::path(out_dir) / (stem + "_overlay.ppm")).string());
    }
    std::cout << "predicted " << images.size() << " images -> " << out_dir << "\n";
    return 0;
}

int cmd_evaluate(const std::string& pred_dir, const std::string& gt_dir,
                 const std::string& out_dir) {
    std::vector<std::string> stems;
    if (!fs::is_directory(gt_dir)) throw std::runtime_error("not a directory: " + gt_dir);
    for (const auto& entry : fs::directory_iterator(gt_dir))
        if (entry.path().extension() == ".pgm" || entry.path().extension() == ".ppm")
            stems.push_back(entry.path().stem().string());
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) throw std::runtime_error("no ground-truth masks in " + gt_dir);

    std::vector<std::string> missing;
    std::vector<ConfidenceMap> preds;
    std::vector<LabelMask> gts;
    for (const std::string& stem : stems) {
        fs::path pred = fs::path(pred_dir) / (stem + "_conf.pgm");
        if (!fs::exists(pred)) {
            missing.push_back(stem);
            continue;
        }
        preds.push_back(load_confidence(pred.string()));
        fs::path gt_pgm = fs::path(gt_dir) / (stem + ".pgm");
        fs::path gt = fs::exists(gt_pgm) ? gt_pgm : fs::path(gt_dir) / (stem + ".ppm");
        gts.push_back(load_mask(gt.string()));
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "missing predictions for stems:";
        for (const auto& s : missing) msg << " " << s;
        throw std::runtime_error(msg.str());
    }
    MetricsReport report = evaluate(preds, gts);
    fs::create_directories(out_dir);
    write_metrics_csv(report, (fs::path(out_dir) / "metrics.csv").string());
    write_pr_curve_csv(report, (fs::path(out_dir) / "pr_curve.csv").string());
    std::cout << "max_f=" << report.max_f << " accuracy=" << report.accuracy << " over "
              << preds.size() << " images\n";
    return 0;
}

int cmd_inspect(const std::string& model_dir) {
    fs::path manifest = fs::path(model_dir) / "manifest.txt";
    if (!fs::exists(manifest))
        throw std::runtime_error("missing bundle piece: " + manifest.string());
    RunConfig cfg = load_run_config(manifest.string());
    for (int scale : cfg.scales) {
        fs::path p = fs::path(model_dir) / ("forest_" + std::to_string(scale) + ".rfle");
        ForestModel model = load_model(p.string());
        std::cout << "model: " << p.filename().string() << "\n";
        std::cout << "trees: " << model.trees.size() << "\n";
        std::cout << "kernels: " << model.kernel_count << "\n";

        std::map<int, int> depth_hist;
        std::int64_t split_nodes = 0, kernel_refs = 0;
        std::string node_counts;
        for (const auto& tree : model.trees) {
            if (!node_counts.empty()) node_counts += ",";
            node_counts += std::to_string(tree.size());
            // leaf depths via root-to-leaf walk
            std::vector<std::pair<std::uint32_t, int>> stack{{0, 0}};
            while (!stack.empty()) {
                auto [idx, depth] = stack.back();
                stack.pop_back();
                const TreeNode& node = tree[idx];
                if (node.kind == TreeNode::kLeaf) {
                    ++depth_hist[depth];
                } else {
                    ++split_nodes;
                    kernel_refs += static_cast<std::int64_t>(node.selection.kernel_ids.size());
                    stack.push_back({node.left, depth + 1});
                    stack.push_back({node.right, depth + 1});
                }
            }
        }
        std::cout << "node_counts: " << node_counts << "\n";
        std::string hist;
        for (const auto& [d, n] : depth_hist) {
            if (!hist.empty()) hist += " ";
            hist += std::to_string(d) + ":" + std::to_string(n);
        }
        std::cout << "leaf_depth_histogram: {" << hist << "}\n";
        std::cout << "mean_kernels_per_node: "
                  << (split_nodes ? static_cast<double>(kernel_refs) / split_nodes : 0.0)
                  << "\n";
        std::cout << "serialized_bytes: " << fs::file_size(p) << "\n";
        std::cout << "memory_bound_bytes: "
                  << estimate_memory(static_cast<int>(model.trees.size()),
                                     model.config.max_depth, model.kernel_count, 4)
                  << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Road segmentation with superpixel-pooled convolutional features and a "
                 "random forest of local linear experts"};
    app.require_subcommand(1);

    std::string config_path, model_dir, images_arg, pred_dir, gt_dir;
    std::string out_dir = ".";
    bool debug = false;
    int threads = -1;
    std::vector<std::string> overrides;

    auto* train = app.add_subcommand("train", "Train per-scale forests and the location prior");
    train->add_option("--config", config_path, "key=value config file")->required();
    train->add_option("--set", overrides, "config overrides, key=value (flag wins)");

    auto* predict = app.add_subcommand("predict", "Produce confidence maps and overlays");
    predict->add_option("--model-dir", model_dir, "trained model bundle")->required();
    predict->add_option("--images", images_arg, "image list file or directory")->required();
    predict->add_option("--out", out_dir, "output directory");
    predict->add_flag("--debug", debug, "also write per-scale maps");
    predict->add_option("--threads", threads, "worker pool size");

    auto* evaluate = app.add_subcommand("evaluate", "Compute pixel metrics against ground truth");
    evaluate->add_option("--pred", pred_dir, "directory of <stem>_conf.pgm maps")->required();
    evaluate->add_option("--gt", gt_dir, "directory of <stem>.pgm masks")->required();
    evaluate->add_option("--out", out_dir, "output directory for CSVs");

    auto* inspect = app.add_subcommand("inspect", "Report model structure and size");
    inspect->add_option("--model-dir", model_dir, "trained model bundle")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) {
            RunConfig cfg = load_run_config(config_path);
            for (const std::string& ov : overrides) {
                auto eq = ov.find('=');
                if (eq == std::string::npos)
                    throw std::runtime_error("override must be key=value: " + ov);
                apply_key(cfg, ov.substr(0, eq), ov.substr(eq + 1));
            }
            return cmd_train(cfg);
        }
        if (predict->parsed()) return cmd_predict(model_dir, images_arg, out_dir, debug, threads);
        if (evaluate->parsed()) return cmd_evaluate(pred_dir, gt_dir, out_dir);
        if (inspect->parsed()) return cmd_inspect(model_dir);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
