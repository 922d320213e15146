#include "roadseg/superpix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace roadseg {

namespace {

// sRGB (0..255) to CIELAB, D65 white point.
void rgb_to_lab(double r, double g, double b, float* lab) {
    auto inv_gamma = [](double u) {
        u /= 255.0;
        return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
    };
    double rl = inv_gamma(r), gl = inv_gamma(g), bl = inv_gamma(b);
    double x = rl * 0.4124564 + gl * 0.3575761 + bl * 0.1804375;
    double y = rl * 0.2126729 + gl * 0.7151522 + bl * 0.0721750;
    double z = rl * 0.0193339 + gl * 0.1191920 + bl * 0.9503041;
    x /= 0.95047;
    z /= 1.08883;
    auto f = [](double t) {
        return t > 0.008856 ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0;
    };
    double fx = f(x), fy = f(y), fz = f(z);
    lab[0] = static_cast<float>(116.0 * fy - 16.0);
    lab[1] = static_cast<float>(500.0 * (fx - fy));
    lab[2] = static_cast<float>(200.0 * (fy - fz));
}

struct Cluster {
    double l = 0, a = 0, b = 0, x = 0, y = 0;
};

}  // namespace

SuperpixelMap slic(const Image& image, int n_superpixels, double compactness, int max_iters) {
    const int w = image.width, h = image.height;
    const std::size_t n_px = static_cast<std::size_t>(w) * h;
    if (n_superpixels < 1 || static_cast<std::size_t>(n_superpixels) > n_px)
        throw std::invalid_argument("slic: n_superpixels out of range");
    if (compactness <= 0) throw std::invalid_argument("slic: compactness must be positive");

    std::vector<float> lab(n_px * 3);
    for (std::size_t i = 0; i < n_px; ++i) {
        if (image.channels == 3)
            rgb_to_lab(image.data[i * 3], image.data[i * 3 + 1], image.data[i * 3 + 2],
                       &lab[i * 3]);
        else
            rgb_to_lab(image.data[i], image.data[i], image.data[i], &lab[i * 3]);
    }

    const double interval = std::sqrt(static_cast<double>(n_px) / n_superpixels);
    const int nx = std::max(1, static_cast<int>(std::lround(w / interval)));
    // derive ny from the requested count so tiny n still seeds ~n clusters
    const int ny = std::max(1, static_cast<int>(std::lround(
                                   static_cast<double>(n_superpixels) / nx)));

    // Seeds on a regular grid, each moved to the lowest-gradient pixel in its
    // 3x3 neighborhood (gradient on L).
    auto gradient = [&](int x, int y) {
        int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
        int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
        double gx = lab[(static_cast<std::size_t>(y) * w + xp) * 3] -
                    lab[(static_cast<std::size_t>(y) * w + xm) * 3];
        double gy = lab[(static_cast<std::size_t>(yp) * w + x) * 3] -
                    lab[(static_cast<std::size_t>(ym) * w + x) * 3];
        return gx * gx + gy * gy;
    };

    std::vector<Cluster> clusters;
    clusters.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int sx = std::min(static_cast<int>((i + 0.5) * w / nx), w - 1);
            int sy = std::min(static_cast<int>((j + 0.5) * h / ny), h - 1);
            int bx = sx, by = sy;
            double bg = gradient(sx, sy);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    int x = sx + dx, y = sy + dy;
                    if (x < 0 || x >= w || y < 0 || y >= h) continue;
                    double g = gradient(x, y);
                    if (g < bg) {
                        bg = g;
                        bx = x;
                        by = y;
                    }
                }
            }
            const float* px = &lab[(static_cast<std::size_t>(by) * w + bx) * 3];
            clusters.push_back({px[0], px[1], px[2], static_cast<double>(bx),
                                static_cast<double>(by)});
        }
    }

    const double spatial_scale = (compactness / interval) * (compactness / interval);
    const int search = std::max(1, static_cast<int>(std::lround(2 * interval)));
    std::vector<int> labels(n_px, -1);
    std::vector<double> best(n_px);

    for (int iter = 0; iter < max_iters; ++iter) {
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::max());
        for (std::size_t k = 0; k < clusters.size(); ++k) {
            const Cluster& c = clusters[k];
            int x0 = std::max(0, static_cast<int>(c.x) - search);
            int x1 = std::min(w - 1, static_cast<int>(c.x) + search);
            int y0 = std::max(0, static_cast<int>(c.y) - search);
            int y1 = std::min(h - 1, static_cast<int>(c.y) + search);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    std::size_t i = static_cast<std::size_t>(y) * w + x;
                    double dl = lab[i * 3] - c.l;
                    double da = lab[i * 3 + 1] - c.a;
                    double db = lab[i * 3 + 2] - c.b;
                    double dx = x - c.x, dy = y - c.y;
                    double d = dl * dl + da * da + db * db + spatial_scale * (dx * dx + dy * dy);
                    if (d < best[i]) {
                        best[i] = d;
                        labels[i] = static_cast<int>(k);
                    }
                }
            }
        }
        // Pixels outside every search window (possible with few clusters):
        // assign to the spatially nearest center.
        for (std::size_t i = 0; i < n_px; ++i) {
            if (labels[i] >= 0) continue;
            int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
            double bd = std::numeric_limits<double>::max();
            for (std::size_t k = 0; k < clusters.size(); ++k) {
                double dx = x - clusters[k].x, dy = y - clusters[k].y;
                double d = dx * dx + dy * dy;
                if (d < bd) {
                    bd = d;
                    labels[i] = static_cast<int>(k);
                }
            }
        }
        // Update centers.
        std::vector<Cluster> sums(clusters.size());
        std::vector<std::int64_t> counts(clusters.size(), 0);
        for (std::size_t i = 0; i < n_px; ++i) {
            Cluster& s = sums[labels[i]];
            s.l += lab[i * 3];
            s.a += lab[i * 3 + 1];
            s.b += lab[i * 3 + 2];
            s.x += static_cast<double>(i % w);
            s.y += static_cast<double>(i / w);
            ++counts[labels[i]];
        }
        for (std::size_t k = 0; k < clusters.size(); ++k) {
            if (counts[k] == 0) continue;
            double inv = 1.0 / counts[k];
            clusters[k] = {sums[k].l * inv, sums[k].a * inv, sums[k].b * inv,
                           sums[k].x * inv, sums[k].y * inv};
        }
    }

    // Connectivity: find 4-connected components, keep the largest component
    // of each cluster label, merge the rest into the largest adjacent region.
    std::vector<int> comp(n_px, -1);
    std::vector<std::int64_t> comp_size;
    std::vector<int> comp_label;
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < n_px; ++seed) {
        if (comp[seed] >= 0) continue;
        int id = static_cast<int>(comp_size.size());
        comp_size.push_back(0);
        comp_label.push_back(labels[seed]);
        stack.assign(1, seed);
        comp[seed] = id;
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            ++comp_size[id];
            int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
            const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                int xx = x + dx[d], yy = y + dy[d];
                if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
                std::size_t j = static_cast<std::size_t>(yy) * w + xx;
                if (comp[j] < 0 && labels[j] == labels[i]) {
                    comp[j] = id;
                    stack.push_back(j);
                }
            }
        }
    }
    const int n_comp = static_cast<int>(comp_size.size());

    // Keeper: largest component per cluster label (tie -> lowest comp id).
    std::vector<int> keeper_of_label(clusters.size(), -1);
    for (int c = 0; c < n_comp; ++c) {
        int lb = comp_label[c];
        int cur = keeper_of_label[lb];
        if (cur < 0 || comp_size[c] > comp_size[cur]) keeper_of_label[lb] = c;
    }

    // Union-find over components; orphans get merged into keeper-rooted
    // regions, choosing the largest adjacent region.
    std::vector<int> parent(n_comp);
    std::vector<std::int64_t> region_size(comp_size);
    for (int c = 0; c < n_comp; ++c) parent[c] = c;
    std::function<int(int)> find = [&](int c) {
        while (parent[c] != c) {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        return c;
    };
    auto is_keeper = [&](int c) { return keeper_of_label[comp_label[c]] == c; };

    // Component adjacency.
    std::vector<std::vector<int>> adj(n_comp);
    for (std::size_t i = 0; i < n_px; ++i) {
        int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        if (x + 1 < w) {
            int a = comp[i], b = comp[i + 1];
            if (a != b) {
                adj[a].push_back(b);
                adj[b].push_back(a);
            }
        }
        if (y + 1 < h) {
            int a = comp[i], b = comp[i + w];
            if (a != b) {
                adj[a].push_back(b);
                adj[b].push_back(a);
            }
        }
    }
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (int c = 0; c < n_comp; ++c) {
            if (is_keeper(c) || find(c) != c) continue;
            int target = -1;
            std::int64_t target_size = -1;
            for (int nb : adj[c]) {
                int root = find(nb);
                // first pass only merges into regions anchored at a keeper
                if (root == c || !is_keeper(root)) continue;
                if (region_size[root] > target_size ||
                    (region_size[root] == target_size && root < target)) {
                    target = root;
                    target_size = region_size[root];
                }
            }
            if (target >= 0) {
                parent[c] = target;
                region_size[target] += region_size[c];
                changed = true;
            }
        }
    }
    // Anything still unmerged (orphans surrounded by orphans): attach to the
    // largest adjacent region regardless of keeper status, repeatedly.
    changed = true;
    while (changed) {
        changed = false;
        for (int c = 0; c < n_comp; ++c) {
            if (find(c) != c || is_keeper(c)) continue;
            int target = -1;
            std::int64_t target_size = -1;
            for (int nb : adj[c]) {
                int root = find(nb);
                if (root == c) continue;
                if (region_size[root] > target_size ||
                    (region_size[root] == target_size && root < target)) {
                    target = root;
                    target_size = region_size[root];
                }
            }
            if (target >= 0) {
                parent[c] = target;
                region_size[target] += region_size[c];
                changed = true;
            }
        }
    }

    // Dense relabel by first occurrence in scan order.
    SuperpixelMap map;
    map.width = w;
    map.height = h;
    map.labels.resize(n_px);
    std::vector<int> dense(n_comp, -1);
    int next_id = 0;
    for (std::size_t i = 0; i < n_px; ++i) {
        int root = find(comp[i]);
        if (dense[root] < 0) dense[root] = next_id++;
        map.labels[i] = dense[root];
    }
    map.region_count = next_id;
    map.region_sizes.assign(next_id, 0);
    for (std::size_t i = 0; i < n_px; ++i) ++map.region_sizes[map.labels[i]];
    return map;
}

SuperpixelFeatureTable pool_features(const FeatureStack& stack, const SuperpixelMap& map) {
    if (stack.width != map.width || stack.height != map.height)
        throw std::invalid_argument("pool_features: dimension mismatch");
    const int r = map.region_count;
    const int k = stack.channels;
    SuperpixelFeatureTable table;
    table.region_count = r;
    table.feature_dim = 2 * k;
    table.descriptors.resize(static_cast<std::size_t>(r) * 2 * k);
    const std::size_t n_px = static_cast<std::size_t>(map.width) * map.height;
    std::vector<double> sum(static_cast<std::size_t>(r));
    std::vector<double> sumsq(static_cast<std::size_t>(r));
    for (int ch = 0; ch < k; ++ch) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(sumsq.begin(), sumsq.end(), 0.0);
        const float* plane = stack.data.data() + static_cast<std::size_t>(ch) * n_px;
        for (std::size_t i = 0; i < n_px; ++i) {
            double v = plane[i];
            sum[map.labels[i]] += v;
            sumsq[map.labels[i]] += v * v;
        }
        for (int rg = 0; rg < r; ++rg) {
            double n = map.region_sizes[rg];
            double mean = sum[rg] / n;
            double var = sumsq[rg] / n - mean * mean;
            if (var < 0) var = 0;  // numeric guard
            float* d = table.descriptors.data() + static_cast<std::size_t>(rg) * 2 * k;
            d[2 * ch] = static_cast<float>(mean);
            d[2 * ch + 1] = static_cast<float>(std::sqrt(var));
        }
    }
    return table;
}

std::vector<std::uint8_t> assign_region_labels(const SuperpixelMap& map, const LabelMask& gt) {
    if (gt.width != map.width || gt.height != map.height)
        throw std::invalid_argument("assign_region_labels: dimension mismatch");
    std::vector<std::int64_t> road(map.region_count, 0);
    const std::size_t n_px = static_cast<std::size_t>(map.width) * map.height;
    for (std::size_t i = 0; i < n_px; ++i)
        if (gt.data[i]) ++road[map.labels[i]];
    std::vector<std::uint8_t> out(map.region_count);
    for (int r = 0; r < map.region_count; ++r)
        out[r] = 2 * road[r] > map.region_sizes[r] ? 1 : 0;  // tie -> non-road
    return out;
}

ConfidenceMap label_image_from_regions(const SuperpixelMap& map,
                                       const std::vector<float>& region_values) {
    if (static_cast<int>(region_values.size()) != map.region_count)
        throw std::invalid_argument("label_image_from_regions: length mismatch");
    ConfidenceMap out;
    out.width = map.width;
    out.height = map.height;
    out.data.resize(map.labels.size());
    for (std::size_t i = 0; i < map.labels.size(); ++i)
        out.data[i] = region_values[map.labels[i]];
    return out;
}

void dump_superpixel_map(const SuperpixelMap& map, const std::string& path) {
    Image img;
    img.width = map.width;
    img.height = map.height;
    img.channels = 1;
    img.data.resize(map.labels.size());
    for (std::size_t i = 0; i < map.labels.size(); ++i)
        img.data[i] = static_cast<std::uint8_t>(map.labels[i] % 256);
    save_image(img, path);
    std::ofstream side(path + ".txt");
    side << "region_count=" << map.region_count << "\n";
}

}  // namespace roadseg
