#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "roadseg/raster.hpp"

namespace roadseg {

// One convolutional layer exported as a fixed filter bank.
struct KernelBank {
    int num_kernels = 0;   // K
    int in_channels = 0;   // C
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    bool apply_relu = true;
    bool has_mean = false;
    std::array<float, 3> channel_means{0.f, 0.f, 0.f};
    std::vector<float> weights;  // K*C*kh*kw
    std::vector<float> biases;   // K

    float weight(int k, int c, int dy, int dx) const {
        return weights[((static_cast<std::size_t>(k) * in_channels + c) * kernel_h + dy) * kernel_w + dx];
    }
};

// Dense per-pixel features, channel-major planes of floats.
struct FeatureStack {
    int width = 0;
    int height = 0;
    int channels = 0;  // K
    std::vector<float> data;  // K * width * height

    float at(int x, int y, int k) const {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }
    float& at(int x, int y, int k) {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }
};

// KBNK file format (little-endian).
KernelBank load_kernel_bank(const std::string& path);
void save_kernel_bank(const KernelBank& bank, const std::string& path);

// Cross-correlation with zero padding ("same"), stride honored; samples are
// normalized to [0,1] (minus per-channel means when the bank carries them),
// bias added, negatives clamped when apply_relu.
FeatureStack convolve(const Image& image, const KernelBank& bank);

// Per-channel bilinear resampling with half-pixel-center alignment.
FeatureStack upsample_bilinear(const FeatureStack& stack, int target_w, int target_h);

// convolve then upsample to the source image dimensions.
FeatureStack extract_hypercolumns(const Image& image, const KernelBank& bank);

// FSTK file format (little-endian).
FeatureStack import_feature_stack(const std::string& path);
void export_feature_stack(const FeatureStack& stack, const std::string& path);

}  // namespace roadseg
