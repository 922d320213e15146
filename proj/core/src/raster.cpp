#include "roadseg/raster.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace roadseg {

namespace {

void skip_pnm_whitespace(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c != EOF && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

int read_pnm_int(std::istream& in, const std::string& what) {
    skip_pnm_whitespace(in);
    int value = 0;
    if (!(in >> value)) throw std::runtime_error("malformed PNM header: missing " + what);
    return value;
}

struct PnmPayload {
    int width;
    int height;
    int channels;
    std::vector<std::uint8_t> data;
};

PnmPayload read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    char magic[2];
    if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
        throw std::runtime_error("malformed header: not a binary PNM (P5/P6): " + path);
    int channels = magic[1] == '5' ? 1 : 3;
    int width = read_pnm_int(in, "width");
    int height = read_pnm_int(in, "height");
    int maxval = read_pnm_int(in, "maxval");
    if (width < 1 || height < 1)
        throw std::runtime_error("malformed header: non-positive dimensions: " + path);
    if (maxval != 255)
        throw std::runtime_error("unsupported sample depth (maxval " + std::to_string(maxval) +
                                 "): " + path);
    in.get();  // single whitespace byte before the payload
    std::size_t n = static_cast<std::size_t>(width) * height * channels;
    std::vector<std::uint8_t> data(n);
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n)))
        throw std::runtime_error("truncated PNM payload: " + path);
    return {width, height, channels, std::move(data)};
}

void write_pnm(const std::string& path, int width, int height, int channels,
               const std::uint8_t* data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << (channels == 1 ? "P5" : "P6") << "\n" << width << " " << height << "\n255\n";
    std::size_t n = static_cast<std::size_t>(width) * height * channels;
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

Image load_image(const std::string& path) {
    PnmPayload p = read_pnm(path);
    Image image;
    image.width = p.width;
    image.height = p.height;
    image.channels = p.channels;
    image.data = std::move(p.data);
    return image;
}

void save_image(const Image& image, const std::string& path) {
    write_pnm(path, image.width, image.height, image.channels, image.data.data());
}

LabelMask load_mask(const std::string& path, int road_threshold) {
    PnmPayload p = read_pnm(path);
    LabelMask mask;
    mask.width = p.width;
    mask.height = p.height;
    mask.data.resize(static_cast<std::size_t>(p.width) * p.height);
    std::size_t n = mask.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        // For P6 only the red channel decides.
        std::uint8_t sample = p.data[i * p.channels];
        mask.data[i] = sample >= road_threshold ? 1 : 0;
    }
    return mask;
}

void save_confidence(const ConfidenceMap& map, const std::string& path) {
    std::vector<std::uint8_t> bytes(map.data.size());
    for (std::size_t i = 0; i < map.data.size(); ++i) {
        // round-half-up
        double q = std::floor(255.0 * map.data[i] + 0.5);
        bytes[i] = static_cast<std::uint8_t>(q < 0 ? 0 : q > 255 ? 255 : q);
    }
    write_pnm(path, map.width, map.height, 1, bytes.data());
}

ConfidenceMap load_confidence(const std::string& path) {
    PnmPayload p = read_pnm(path);
    ConfidenceMap map;
    map.width = p.width;
    map.height = p.height;
    map.data.resize(static_cast<std::size_t>(p.width) * p.height);
    for (std::size_t i = 0; i < map.data.size(); ++i)
        map.data[i] = static_cast<float>(p.data[i * p.channels]) / 255.f;
    return map;
}

Image overlay(const Image& image, const ConfidenceMap& map, const LabelMask* gt) {
    if (image.width != map.width || image.height != map.height)
        throw std::invalid_argument("overlay: image/confidence dimension mismatch");
    if (gt && (gt->width != image.width || gt->height != image.height))
        throw std::invalid_argument("overlay: image/ground-truth dimension mismatch");
    Image out;
    out.width = image.width;
    out.height = image.height;
    out.channels = 3;
    out.data.resize(static_cast<std::size_t>(out.width) * out.height * 3);
    std::size_t n = static_cast<std::size_t>(out.width) * out.height;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t r, g, b;
        if (image.channels == 3) {
            r = image.data[i * 3];
            g = image.data[i * 3 + 1];
            b = image.data[i * 3 + 2];
        } else {
            r = g = b = image.data[i];
        }
        float p = map.data[i];
        float blue = b + (255.f - b) * p;
        float red = r;
        if (gt && gt->data[i]) red = r + (255.f - r);
        out.data[i * 3] = static_cast<std::uint8_t>(std::floor(red + 0.5f));
        out.data[i * 3 + 1] = g;
        out.data[i * 3 + 2] = static_cast<std::uint8_t>(std::floor(blue + 0.5f));
    }
    return out;
}

}  // namespace roadseg
