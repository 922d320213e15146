#include "roadseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "roadseg/parallel.hpp"
#include "roadseg/superpix.hpp"

namespace fs = std::filesystem;

namespace roadseg {

namespace {

constexpr int kPriorRefWidth = 512;
constexpr int kPriorRefHeight = 256;

// Bilinear resize of a single float plane, half-pixel centers.
std::vector<float> resize_plane(const std::vector<float>& src, int sw, int sh,
                                int tw, int th) {
    FeatureStack stack;
    stack.width = sw;
    stack.height = sh;
    stack.channels = 1;
    stack.data = src;
    return upsample_bilinear(stack, tw, th).data;
}

}  // namespace

void validate_scales(const ScaleSet& scales) {
    if (scales.counts.empty()) throw std::invalid_argument("scales: empty");
    for (std::size_t i = 0; i < scales.counts.size(); ++i) {
        if (scales.counts[i] < 1) throw std::invalid_argument("scales: counts must be >= 1");
        if (i > 0 && scales.counts[i] <= scales.counts[i - 1])
            throw std::invalid_argument("scales: counts must be strictly increasing");
    }
}

DatasetIndex load_dataset_index(const std::string& root, const std::string& split) {
    DatasetIndex index;
    index.split = split;
    fs::path list_path = fs::path(root) / (split + ".txt");
    std::ifstream list(list_path);
    if (!list) throw std::runtime_error("cannot open split list: " + list_path.string());
    std::string stem;
    while (std::getline(list, stem)) {
        while (!stem.empty() && (stem.back() == '\r' || stem.back() == ' ')) stem.pop_back();
        if (stem.empty()) continue;
        DatasetIndex::Pair pair;
        pair.stem = stem;
        for (const char* ext : {".ppm", ".pgm"}) {
            fs::path p = fs::path(root) / "images" / (stem + ext);
            if (fs::exists(p)) {
                pair.image_path = p.string();
                break;
            }
        }
        if (pair.image_path.empty())
            throw std::runtime_error("missing image for stem '" + stem + "' under " + root);
        fs::path mask = fs::path(root) / "masks" / (stem + ".pgm");
        if (fs::exists(mask)) pair.mask_path = mask.string();
        index.pairs.push_back(std::move(pair));
    }
    if (index.pairs.empty())
        throw std::runtime_error("empty split list: " + list_path.string());
    return index;
}

PriorMask learn_prior(const std::vector<LabelMask>& train_masks, int target_w, int target_h) {
    if (train_masks.empty()) throw std::invalid_argument("learn_prior: no masks");
    PriorMask prior;
    prior.width = target_w;
    prior.height = target_h;
    prior.data.assign(static_cast<std::size_t>(target_w) * target_h, 0.f);
    std::vector<float> plane;
    for (const LabelMask& mask : train_masks) {
        plane.assign(mask.data.begin(), mask.data.end());
        std::vector<float> resized =
            resize_plane(plane, mask.width, mask.height, target_w, target_h);
        for (std::size_t i = 0; i < prior.data.size(); ++i) prior.data[i] += resized[i];
    }
    float inv = 1.f / static_cast<float>(train_masks.size());
    for (float& v : prior.data) v = std::clamp(v * inv, kPriorFloor, 1.f);
    return prior;
}

PriorMask resize_prior(const PriorMask& prior, int target_w, int target_h) {
    if (prior.width == target_w && prior.height == target_h) return prior;
    PriorMask out;
    out.width = target_w;
    out.height = target_h;
    out.data = resize_plane(prior.data, prior.width, prior.height, target_w, target_h);
    for (float& v : out.data) v = std::clamp(v, kPriorFloor, 1.f);
    return out;
}

TrainedPipeline train_pipeline(const DatasetIndex& index, const KernelBank& bank,
                               const ScaleSet& scales, const ForestConfig& fconfig) {
    validate_scales(scales);
    for (const auto& pair : index.pairs)
        if (pair.mask_path.empty())
            throw std::runtime_error("training pair without mask: " + pair.stem);

    const std::size_t n_images = index.pairs.size();
    const std::size_t n_scales = scales.counts.size();

    // Per image: hypercolumns once, then one pooled table per scale.
    std::vector<std::vector<SuperpixelFeatureTable>> tables(n_scales,
        std::vector<SuperpixelFeatureTable>(n_images));
    std::vector<LabelMask> masks(n_images);
    parallel_for(n_images, [&](std::size_t i) {
        const auto& pair = index.pairs[i];
        Image image = load_image(pair.image_path);
        LabelMask mask = load_mask(pair.mask_path);
        if (mask.width != image.width || mask.height != image.height)
            throw std::runtime_error("image/mask dimension mismatch for stem " + pair.stem);
        FeatureStack stack = extract_hypercolumns(image, bank);
        for (std::size_t s = 0; s < n_scales; ++s) {
            SuperpixelMap map = slic(image, scales.counts[s]);
            SuperpixelFeatureTable table = pool_features(stack, map);
            table.scale = scales.counts[s];
            table.labels = assign_region_labels(map, mask);
            tables[s][i] = std::move(table);
        }
        masks[i] = std::move(mask);
    });

    TrainedPipeline trained;
    trained.prior = learn_prior(masks, kPriorRefWidth, kPriorRefHeight);
    trained.models.resize(n_scales);
    for (std::size_t s = 0; s < n_scales; ++s)
        trained.models[s] = train_forest(tables[s], fconfig);
    return trained;
}

ConfidenceMap predict_image(const Image& image, const KernelBank& bank,
                            const std::vector<ForestModel>& models,
                            const ScaleSet& scales, const PriorMask& prior,
                            std::vector<ConfidenceMap>* per_scale) {
    validate_scales(scales);
    if (models.size() != scales.counts.size())
        throw std::invalid_argument("predict_image: models/scales length mismatch");

    FeatureStack stack = extract_hypercolumns(image, bank);
    std::vector<ConfidenceMap> scale_maps(scales.counts.size());
    for (std::size_t s = 0; s < scales.counts.size(); ++s) {
        SuperpixelMap map = slic(image, scales.counts[s]);
        SuperpixelFeatureTable table = pool_features(stack, map);
        std::vector<float> values(table.region_count);
        for (int r = 0; r < table.region_count; ++r)
            values[r] = static_cast<float>(
                predict(models[s], table.descriptor(r), table.feature_dim));
        scale_maps[s] = label_image_from_regions(map, values);
    }

    ConfidenceMap pooled;
    pooled.width = image.width;
    pooled.height = image.height;
    pooled.data.assign(static_cast<std::size_t>(image.width) * image.height, 0.f);
    // fixed summation order: scale 0, 1, ...
    for (const auto& m : scale_maps)
        for (std::size_t i = 0; i < pooled.data.size(); ++i) pooled.data[i] += m.data[i];
    float inv = 1.f / static_cast<float>(scale_maps.size());
    for (float& v : pooled.data) v *= inv;

    PriorMask local = resize_prior(prior, image.width, image.height);
    for (std::size_t i = 0; i < pooled.data.size(); ++i)
        pooled.data[i] = std::clamp(pooled.data[i] * local.data[i], 0.f, 1.f);

    if (per_scale) *per_scale = std::move(scale_maps);
    return pooled;
}

LabelMask binarize(const ConfidenceMap& map, float threshold) {
    LabelMask out;
    out.width = map.width;
    out.height = map.height;
    out.data.resize(map.data.size());
    for (std::size_t i = 0; i < map.data.size(); ++i)
        out.data[i] = map.data[i] >= threshold ? 1 : 0;
    return out;
}

MetricsReport evaluate(const std::vector<ConfidenceMap>& preds,
                       const std::vector<LabelMask>& gts) {
    if (preds.empty() || preds.size() != gts.size())
        throw std::invalid_argument("evaluate: empty or misaligned inputs");
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i].width != gts[i].width || preds[i].height != gts[i].height)
            throw std::invalid_argument("evaluate: prediction/gt dimension mismatch");

    constexpr int kSweep = 256;
    struct Confusion {
        std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    };
    std::vector<Confusion> sweep(kSweep);
    std::int64_t total_pos = 0, total_neg = 0;

    // Counting trick: a pixel with confidence p is predicted positive at
    // every threshold i/255 <= p, i.e. for i in [0, floor(p*255)].
    std::vector<std::vector<std::int64_t>> pos_hist(preds.size()),
        neg_hist(preds.size());
    std::vector<std::int64_t> correct_half(preds.size(), 0);
    std::vector<float> thresholds(kSweep);
    for (int t = 0; t < kSweep; ++t) thresholds[t] = static_cast<float>(t) / 255.f;
    parallel_for(preds.size(), [&](std::size_t img) {
        std::vector<std::int64_t> ph(kSweep, 0), nh(kSweep, 0);
        const auto& p = preds[img];
        const auto& g = gts[img];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            // largest swept threshold still classifying this pixel positive
            int bucket = static_cast<int>(std::upper_bound(thresholds.begin(),
                                                           thresholds.end(), p.data[i]) -
                                          thresholds.begin()) - 1;
            if (bucket < 0) bucket = 0;  // p < 0 cannot happen for valid maps
            (g.data[i] ? ph : nh)[bucket] += 1;
            if ((p.data[i] >= 0.5f ? 1 : 0) == g.data[i]) ++correct_half[img];
        }
        pos_hist[img] = std::move(ph);
        neg_hist[img] = std::move(nh);
    });
    std::vector<std::int64_t> pos_bucket(kSweep, 0), neg_bucket(kSweep, 0);
    for (std::size_t img = 0; img < preds.size(); ++img) {
        for (int b = 0; b < kSweep; ++b) {
            pos_bucket[b] += pos_hist[img][b];
            neg_bucket[b] += neg_hist[img][b];
        }
    }
    for (int b = 0; b < kSweep; ++b) {
        total_pos += pos_bucket[b];
        total_neg += neg_bucket[b];
    }
    // suffix sums: predicted positive at threshold t = sum of buckets >= t
    std::int64_t pos_ge = 0, neg_ge = 0;
    for (int t = kSweep - 1; t >= 0; --t) {
        pos_ge += pos_bucket[t];
        neg_ge += neg_bucket[t];
        sweep[t].tp = pos_ge;
        sweep[t].fp = neg_ge;
        sweep[t].fn = total_pos - pos_ge;
        sweep[t].tn = total_neg - neg_ge;
    }

    MetricsReport report;
    report.curve.reserve(kSweep);
    double best_f = -1.0;
    int best_t = 0;
    for (int t = 0; t < kSweep; ++t) {
        const Confusion& c = sweep[t];
        double precision = (c.tp + c.fp) > 0
                               ? static_cast<double>(c.tp) / (c.tp + c.fp)
                               : 1.0;  // no positive predictions
        double recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
        double f = (precision + recall) > 0 ? 2.0 * precision * recall / (precision + recall)
                                            : 0.0;
        report.curve.push_back({t / 255.0, precision, recall});
        if (f > best_f) {
            best_f = f;
            best_t = t;
        }
    }
    report.max_f = 100.0 * best_f;
    report.threshold_at_maxf = best_t / 255.0;
    const Confusion& cb = sweep[best_t];
    report.precision_at_maxf = 100.0 * ((cb.tp + cb.fp) > 0
                                            ? static_cast<double>(cb.tp) / (cb.tp + cb.fp)
                                            : 1.0);
    report.recall_at_maxf =
        100.0 * ((cb.tp + cb.fn) > 0 ? static_cast<double>(cb.tp) / (cb.tp + cb.fn) : 0.0);
    report.fpr_at_maxf =
        100.0 * ((cb.fp + cb.tn) > 0 ? static_cast<double>(cb.fp) / (cb.fp + cb.tn) : 0.0);
    report.fnr_at_maxf =
        100.0 * ((cb.fn + cb.tp) > 0 ? static_cast<double>(cb.fn) / (cb.fn + cb.tp) : 0.0);

    // accuracy at threshold 0.5, outside the sweep grid
    std::int64_t correct = 0;
    for (std::int64_t c : correct_half) correct += c;
    report.accuracy = 100.0 * static_cast<double>(correct) /
                      static_cast<double>(total_pos + total_neg);

    // AP: trapezoid over the PR sweep, consecutive thresholds
    double ap = 0.0;
    for (int t = 0; t + 1 < kSweep; ++t) {
        const auto& a = report.curve[t];
        const auto& b = report.curve[t + 1];
        ap += (a.recall - b.recall) * 0.5 * (a.precision + b.precision);
    }
    report.average_precision = 100.0 * ap;
    return report;
}

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << "metric,value\n";
    out << "accuracy," << report.accuracy << "\n";
    out << "max_f," << report.max_f << "\n";
    out << "average_precision," << report.average_precision << "\n";
    out << "recall_at_maxf," << report.recall_at_maxf << "\n";
    out << "precision_at_maxf," << report.precision_at_maxf << "\n";
    out << "fpr_at_maxf," << report.fpr_at_maxf << "\n";
    out << "fnr_at_maxf," << report.fnr_at_maxf << "\n";
    out << "threshold_at_maxf," << report.threshold_at_maxf << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_pr_curve_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << "threshold,precision,recall\n";
    for (const auto& pt : report.curve)
        out << pt.threshold << "," << pt.precision << "," << pt.recall << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace roadseg
