#pragma once

#include <cstdint>
#include <vector>

#include "roadseg/featext.hpp"
#include "roadseg/raster.hpp"

namespace roadseg {

// Dense pixel -> region labeling at one superpixel scale. Region ids are
// 0..region_count-1, every region non-empty and 4-connected.
struct SuperpixelMap {
    int width = 0;
    int height = 0;
    int region_count = 0;
    std::vector<int> labels;        // row-major
    std::vector<int> region_sizes;  // region_count entries

    int at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
};

// Per-region pooled descriptors. Layout per kernel k: mean_k then std_k,
// kernels in order, so feature_dim == 2 * K.
struct SuperpixelFeatureTable {
    int region_count = 0;
    int feature_dim = 0;
    int scale = 0;  // requested superpixel count
    std::vector<float> descriptors;     // region_count * feature_dim
    std::vector<std::uint8_t> labels;   // optional, region_count entries

    const float* descriptor(int r) const {
        return descriptors.data() + static_cast<std::size_t>(r) * feature_dim;
    }
};

// SLIC: k-means in (Lab, xy) space with spatially bounded search, fixed seed
// grid perturbed to the lowest-gradient 3x3 neighbor, orphan components
// merged into the largest adjacent region. Deterministic.
SuperpixelMap slic(const Image& image, int n_superpixels,
                   double compactness = 10.0, int max_iters = 10);

// Mean and population standard deviation per region and channel.
SuperpixelFeatureTable pool_features(const FeatureStack& stack, const SuperpixelMap& map);

// Majority pixel label per region; exact tie -> 0.
std::vector<std::uint8_t> assign_region_labels(const SuperpixelMap& map, const LabelMask& gt);

// Broadcasts one value per region back onto pixels.
ConfidenceMap label_image_from_regions(const SuperpixelMap& map,
                                       const std::vector<float>& region_values);

// Debug dump: P5 with label mod 256 plus a "region_count=R" sidecar.
void dump_superpixel_map(const SuperpixelMap& map, const std::string& path);

}  // namespace roadseg
