#include "roadseg/featext.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "roadseg/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "KBNK/FSTK I/O assumes a little-endian host");

namespace roadseg {

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
        throw std::runtime_error(std::string("truncated file while reading ") + what);
    return value;
}

void read_f32_array(std::istream& in, float* dst, std::size_t n, const char* what) {
    if (!in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(float))))
        throw std::runtime_error(std::string("truncated file while reading ") + what);
}

void check_magic(std::istream& in, const char expect[4], const std::string& path) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, expect, 4) != 0)
        throw std::runtime_error("bad magic in " + path);
}

}  // namespace

KernelBank load_kernel_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    check_magic(in, "KBNK", path);
    std::uint32_t version = read_le<std::uint32_t>(in, "version");
    if (version != 1) throw std::runtime_error("unsupported KBNK version: " + path);
    KernelBank bank;
    bank.num_kernels = static_cast<int>(read_le<std::uint32_t>(in, "K"));
    bank.in_channels = static_cast<int>(read_le<std::uint32_t>(in, "C"));
    bank.kernel_h = static_cast<int>(read_le<std::uint32_t>(in, "kh"));
    bank.kernel_w = static_cast<int>(read_le<std::uint32_t>(in, "kw"));
    bank.stride = static_cast<int>(read_le<std::uint32_t>(in, "stride"));
    bank.apply_relu = read_le<std::uint8_t>(in, "apply_relu") != 0;
    bank.has_mean = read_le<std::uint8_t>(in, "has_mean") != 0;
    if (bank.num_kernels < 1) throw std::runtime_error("zero kernels in " + path);
    if (bank.in_channels < 1 || bank.kernel_h < 1 || bank.kernel_w < 1 || bank.stride < 1)
        throw std::runtime_error("invalid kernel bank dimensions in " + path);
    if (bank.has_mean) read_f32_array(in, bank.channel_means.data(), 3, "channel means");
    std::size_t nw = static_cast<std::size_t>(bank.num_kernels) * bank.in_channels *
                     bank.kernel_h * bank.kernel_w;
    bank.weights.resize(nw);
    read_f32_array(in, bank.weights.data(), nw, "weights");
    bank.biases.resize(bank.num_kernels);
    read_f32_array(in, bank.biases.data(), bank.biases.size(), "biases");
    return bank;
}

void save_kernel_bank(const KernelBank& bank, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.write("KBNK", 4);
    write_le<std::uint32_t>(out, 1);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.num_kernels));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.in_channels));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.kernel_h));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.kernel_w));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.stride));
    write_le<std::uint8_t>(out, bank.apply_relu ? 1 : 0);
    write_le<std::uint8_t>(out, bank.has_mean ? 1 : 0);
    if (bank.has_mean)
        out.write(reinterpret_cast<const char*>(bank.channel_means.data()), 3 * sizeof(float));
    out.write(reinterpret_cast<const char*>(bank.weights.data()),
              static_cast<std::streamsize>(bank.weights.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(bank.biases.data()),
              static_cast<std::streamsize>(bank.biases.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

FeatureStack convolve(const Image& image, const KernelBank& bank) {
    if (image.channels != bank.in_channels)
        throw std::invalid_argument("convolve: image channels != bank in_channels");
    const int w = image.width, h = image.height, c = image.channels;
    const int stride = bank.stride;
    const int ow = (w + stride - 1) / stride;
    const int oh = (h + stride - 1) / stride;
    const int pad_y = bank.kernel_h / 2;
    const int pad_x = bank.kernel_w / 2;

    // Normalize once: samples / 255, minus per-channel mean when present.
    std::vector<float> norm(static_cast<std::size_t>(w) * h * c);
    for (int ch = 0; ch < c; ++ch) {
        float mean = bank.has_mean ? bank.channel_means[ch] : 0.f;
        for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i)
            norm[i * c + ch] = static_cast<float>(image.data[i * c + ch]) / 255.f - mean;
    }

    FeatureStack out;
    out.width = ow;
    out.height = oh;
    out.channels = bank.num_kernels;
    out.data.resize(static_cast<std::size_t>(bank.num_kernels) * ow * oh);

    parallel_for(static_cast<std::size_t>(bank.num_kernels), [&](std::size_t k) {
        float* plane = out.data.data() + k * static_cast<std::size_t>(ow) * oh;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bank.biases[k];
                const int cy = oy * stride, cx = ox * stride;
                for (int ch = 0; ch < c; ++ch) {
                    for (int dy = 0; dy < bank.kernel_h; ++dy) {
                        int y = cy + dy - pad_y;
                        if (y < 0 || y >= h) continue;
                        for (int dx = 0; dx < bank.kernel_w; ++dx) {
                            int x = cx + dx - pad_x;
                            if (x < 0 || x >= w) continue;
                            acc += static_cast<double>(bank.weight(static_cast<int>(k), ch, dy, dx)) *
                                   norm[(static_cast<std::size_t>(y) * w + x) * c + ch];
                        }
                    }
                }
                float v = static_cast<float>(acc);
                if (bank.apply_relu && v < 0.f) v = 0.f;
                plane[static_cast<std::size_t>(oy) * ow + ox] = v;
            }
        }
    });
    return out;
}

FeatureStack upsample_bilinear(const FeatureStack& stack, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1)
        throw std::invalid_argument("upsample_bilinear: invalid target dimensions");
    if (target_w == stack.width && target_h == stack.height) return stack;
    FeatureStack out;
    out.width = target_w;
    out.height = target_h;
    out.channels = stack.channels;
    out.data.resize(static_cast<std::size_t>(stack.channels) * target_w * target_h);
    const double sx = static_cast<double>(stack.width) / target_w;
    const double sy = static_cast<double>(stack.height) / target_h;
    parallel_for(static_cast<std::size_t>(stack.channels), [&](std::size_t k) {
        const float* src = stack.data.data() + k * static_cast<std::size_t>(stack.width) * stack.height;
        float* dst = out.data.data() + k * static_cast<std::size_t>(target_w) * target_h;
        for (int y = 0; y < target_h; ++y) {
            // half-pixel centers
            double fy = (y + 0.5) * sy - 0.5;
            int y0 = static_cast<int>(std::floor(fy));
            double wy = fy - y0;
            int y1 = std::min(y0 + 1, stack.height - 1);
            y0 = std::clamp(y0, 0, stack.height - 1);
            for (int x = 0; x < target_w; ++x) {
                double fx = (x + 0.5) * sx - 0.5;
                int x0 = static_cast<int>(std::floor(fx));
                double wx = fx - x0;
                int x1 = std::min(x0 + 1, stack.width - 1);
                x0 = std::clamp(x0, 0, stack.width - 1);
                double top = src[static_cast<std::size_t>(y0) * stack.width + x0] * (1.0 - wx) +
                             src[static_cast<std::size_t>(y0) * stack.width + x1] * wx;
                double bot = src[static_cast<std::size_t>(y1) * stack.width + x0] * (1.0 - wx) +
                             src[static_cast<std::size_t>(y1) * stack.width + x1] * wx;
                dst[static_cast<std::size_t>(y) * target_w + x] =
                    static_cast<float>(top * (1.0 - wy) + bot * wy);
            }
        }
    });
    return out;
}

FeatureStack extract_hypercolumns(const Image& image, const KernelBank& bank) {
    return upsample_bilinear(convolve(image, bank), image.width, image.height);
}

FeatureStack import_feature_stack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    check_magic(in, "FSTK", path);
    std::uint32_t version = read_le<std::uint32_t>(in, "version");
    if (version != 1) throw std::runtime_error("unsupported FSTK version: " + path);
    FeatureStack stack;
    stack.channels = static_cast<int>(read_le<std::uint32_t>(in, "K"));
    stack.width = static_cast<int>(read_le<std::uint32_t>(in, "width"));
    stack.height = static_cast<int>(read_le<std::uint32_t>(in, "height"));
    if (stack.channels < 1 || stack.width < 1 || stack.height < 1)
        throw std::runtime_error("invalid FSTK dimensions in " + path);
    std::size_t n = static_cast<std::size_t>(stack.channels) * stack.width * stack.height;
    stack.data.resize(n);
    read_f32_array(in, stack.data.data(), n, "feature planes");
    return stack;
}

void export_feature_stack(const FeatureStack& stack, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.write("FSTK", 4);
    write_le<std::uint32_t>(out, 1);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.channels));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.width));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.height));
    out.write(reinterpret_cast<const char*>(stack.data.data()),
              static_cast<std::streamsize>(stack.data.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace roadseg
