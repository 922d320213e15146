#pragma once

#include <string>
#include <vector>

#include "roadseg/featext.hpp"
#include "roadseg/forest.hpp"
#include "roadseg/raster.hpp"

namespace roadseg {

// Superpixel counts per scale, strictly increasing.
struct ScaleSet {
    std::vector<int> counts{400, 800, 1200};
};
void validate_scales(const ScaleSet& scales);

// Per-pixel empirical road frequency, clamped to [0.05, 1].
struct PriorMask {
    int width = 0;
    int height = 0;
    std::vector<float> data;
};
inline constexpr float kPriorFloor = 0.05f;

// (image, mask) pairs resolved from the dataset layout:
// root/images/<stem>.ppm|pgm, root/masks/<stem>.pgm, root/{train,test}.txt.
struct DatasetIndex {
    struct Pair {
        std::string stem;
        std::string image_path;
        std::string mask_path;  // may be empty for unlabeled prediction sets
    };
    std::vector<Pair> pairs;
    std::string split;  // "train" or "test"
};
DatasetIndex load_dataset_index(const std::string& root, const std::string& split);

struct MetricsReport {
    double accuracy = 0.0;          // percent, at threshold 0.5
    double max_f = 0.0;             // percent
    double average_precision = 0.0; // percent
    double recall_at_maxf = 0.0;    // percent
    double precision_at_maxf = 0.0; // percent
    double fpr_at_maxf = 0.0;       // percent
    double fnr_at_maxf = 0.0;       // percent
    double threshold_at_maxf = 0.0;
    struct CurvePoint {
        double threshold;
        double precision;
        double recall;
    };
    std::vector<CurvePoint> curve;  // 256 swept thresholds i/255
};

struct TrainedPipeline {
    std::vector<ForestModel> models;  // one per scale
    PriorMask prior;
};

// Frequency of road over the training masks, each bilinearly resized to the
// target resolution, clamped to [0.05, 1].
PriorMask learn_prior(const std::vector<LabelMask>& train_masks, int target_w, int target_h);

PriorMask resize_prior(const PriorMask& prior, int target_w, int target_h);

// One forest per scale, each trained on that scale's pooled tables; the
// prior is learned at a fixed 512x256 reference resolution.
TrainedPipeline train_pipeline(const DatasetIndex& index, const KernelBank& bank,
                               const ScaleSet& scales, const ForestConfig& fconfig);

// Per scale: hypercolumns -> slic -> pool -> per-region predict -> pixels;
// scales are mean-pooled in order, then multiplied by the resized prior.
// per_scale, when given, receives each scale's map before pooling.
ConfidenceMap predict_image(const Image& image, const KernelBank& bank,
                            const std::vector<ForestModel>& models,
                            const ScaleSet& scales, const PriorMask& prior,
                            std::vector<ConfidenceMap>* per_scale = nullptr);

// Pixel >= threshold -> road.
LabelMask binarize(const ConfidenceMap& map, float threshold);

// Pixel-level confusion counts pooled over all images, swept over the 256
// thresholds i/255.
MetricsReport evaluate(const std::vector<ConfidenceMap>& preds,
                       const std::vector<LabelMask>& gts);

void write_metrics_csv(const MetricsReport& report, const std::string& path);
void write_pr_curve_csv(const MetricsReport& report, const std::string& path);

}  // namespace roadseg
