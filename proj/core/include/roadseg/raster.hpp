#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace roadseg {

// 8-bit image, row-major, channel-interleaved. channels is 1 or 3.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Binary per-pixel labels: 0 = non-road, 1 = road.
struct LabelMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

// Per-pixel road probability in [0,1].
struct ConfidenceMap {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    float at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    float& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

// Binary PNM (P5/P6) only, maxval must be 255.
Image load_image(const std::string& path);
void save_image(const Image& image, const std::string& path);

// Binarizes a mask file: sample >= road_threshold -> 1. P6 masks are read
// from the red channel only.
LabelMask load_mask(const std::string& path, int road_threshold = 128);

// Writes a P5 file with sample = round(255 * p), round-half-up.
void save_confidence(const ConfidenceMap& map, const std::string& path);
ConfidenceMap load_confidence(const std::string& path);

// Blends prediction into the blue channel and, when given, ground truth into
// the red channel of a 3-channel copy of the input.
Image overlay(const Image& image, const ConfidenceMap& map,
              const LabelMask* gt = nullptr);

}  // namespace roadseg
