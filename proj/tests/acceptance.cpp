// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "roadseg/forest.hpp"
#include "roadseg/parallel.hpp"
#include "roadseg/pipeline.hpp"
#include "roadseg/raster.hpp"
#include "roadseg/superpix.hpp"
#include "roadseg/svm.hpp"
#include "synthetic.hpp"

using namespace roadseg;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
    std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " - "
              << what << std::endl;
    if (!pass) ++g_failures;
}

double entropy_oracle(std::int64_t a, std::int64_t b) {
    double n = static_cast<double>(a + b);
    double h = 0.0;
    for (std::int64_t c : {a, b}) {
        if (c == 0) continue;
        double p = c / n;
        h -= p * std::log2(p);
    }
    return h;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------- criterion 1

void criterion_memory_model() {
    auto t0 = clk::now();
    std::uint64_t bytes = estimate_memory(10, 10, 64, 4);
    double ms = std::chrono::duration<double, std::milli>(clk::now() - t0).count();
    double mib = static_cast<double>(bytes) / (1024.0 * 1024.0);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", mib);
    bool pass = bytes == 5'283'840ull && std::string(buf) == "5.039" && ms < 1.0;
    std::ostringstream what;
    what << "estimate_memory(10,10,64,4) = " << bytes << " bytes (" << buf << " MiB, "
         << ms << " ms)";
    report(1, pass, what.str());
}

// --------------------------------------------------- synthetic 64-channel set

SampleSet make_wide_sample_set(std::size_t n, int kernels, std::uint64_t seed) {
    SampleSet set;
    set.dim = 2 * kernels;
    set.features.resize(n * static_cast<std::size_t>(set.dim));
    set.labels.resize(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> noise(0.f, 1.f);
    for (std::size_t i = 0; i < n; ++i) {
        bool road = (i & 1) != 0;
        for (int d = 0; d < set.dim; ++d) {
            float base = road ? 0.6f * std::sin(0.3f * d) : 0.6f * std::cos(0.3f * d);
            set.features[i * set.dim + d] = base + noise(rng);
        }
        set.labels[i] = road ? 1 : 0;
    }
    return set;
}

std::vector<std::uint8_t> serialize_forest(const ForestModel& model, const fs::path& p) {
    save_model(model, p.string());
    return read_bytes(p.string());
}

void criterion_size_bound(const fs::path& work) {
    auto t0 = clk::now();
    SampleSet set = make_wide_sample_set(4000, 64, 77);
    ForestConfig cfg;  // T=10, l=10
    cfg.seed = 3;
    cfg.svm.seed = 3;
    ForestModel model = train_forest(set, cfg);
    fs::path p = work / "size_bound.rfle";
    save_model(model, p.string());
    std::uint64_t actual = fs::file_size(p);
    std::uint64_t bound = estimate_memory(10, 10, 64, 4);
    double s = std::chrono::duration<double>(clk::now() - t0).count();
    std::ostringstream what;
    what << "serialized forest " << actual << " bytes < bound " << bound << " ("
         << s << " s)";
    report(2, actual < bound && s < 300.0, what.str());
}

// ---------------------------------------------------------------- criterion 3

void criterion_gain_oracle() {
    bool pass = true;
    for (int n = 2; n <= 12 && pass; ++n) {
        for (int labels = 0; labels < (1 << n) && pass; ++labels) {
            std::int64_t pos = 0;
            for (int i = 0; i < n; ++i) pos += (labels >> i) & 1;
            std::int64_t neg = n - pos;
            // every binary-threshold split of the 1-D dataset 0..n-1 = a prefix
            for (int split = 1; split < n; ++split) {
                std::int64_t lp = 0;
                for (int i = 0; i < split; ++i) lp += (labels >> i) & 1;
                std::int64_t ln = split - lp;
                std::int64_t rp = pos - lp, rn = neg - ln;
                double got = information_gain(pos, neg, lp, ln, rp, rn);
                double want = entropy_oracle(pos, neg) -
                              (static_cast<double>(split) / n) * entropy_oracle(lp, ln) -
                              (static_cast<double>(n - split) / n) * entropy_oracle(rp, rn);
                if (std::abs(got - want) > 1e-12) pass = false;
            }
        }
    }
    report(3, pass, "information_gain matches the entropy-formula oracle on all "
                    "splits of all <=12-sample label patterns (1e-12)");
}

// ---------------------------------------------------------------- criterion 4

void criterion_threshold_oracle() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<float> dist(-2.f, 2.f);
    bool pass = true;
    for (int fixture = 0; fixture < 200 && pass; ++fixture) {
        std::vector<std::vector<float>> xs;
        std::vector<std::uint8_t> ys;
        int pos = 0;
        for (int i = 0; i < 12; ++i) {
            xs.push_back({dist(rng), dist(rng)});
            bool label = (rng() & 1) != 0;
            if (i == 10 && pos == 0) label = true;       // guarantee both classes
            if (i == 11 && pos == static_cast<int>(ys.size())) label = false;
            pos += label ? 1 : 0;
            ys.push_back(label ? 1 : 0);
        }
        SvmConfig svm;
        svm.seed = static_cast<std::uint64_t>(fixture);
        CandidateResult got = evaluate_candidate(xs, ys, svm);

        // exhaustive midpoint sweep over the same expert's scores
        std::vector<double> scores;
        for (const auto& x : xs) scores.push_back(svm_score(got.expert, x));
        std::vector<double> sorted = scores;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::int64_t tot_pos = 0;
        for (auto y : ys) tot_pos += y;
        std::int64_t tot_neg = static_cast<std::int64_t>(ys.size()) - tot_pos;
        double best_gain = -1.0;
        float best_tau = 0.f;
        bool any = false;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            float tau = static_cast<float>(0.5 * (sorted[i] + sorted[i + 1]));
            std::int64_t lp = 0, ln = 0;
            for (std::size_t j = 0; j < scores.size(); ++j) {
                if (scores[j] <= tau) (ys[j] ? lp : ln) += 1;
            }
            double gain = information_gain(tot_pos, tot_neg, lp, ln, tot_pos - lp,
                                           tot_neg - ln);
            if (gain > best_gain) {
                best_gain = gain;
                best_tau = tau;
                any = true;
            }
        }
        if (!any) {
            if (got.gain != 0.0) pass = false;
        } else if (got.gain != best_gain || got.threshold != best_tau) {
            pass = false;
        }
    }
    report(4, pass, "evaluate_candidate (tau*, gain) equals the exhaustive midpoint "
                    "sweep on 200 random 12-sample fixtures, exactly");
}

// ---------------------------------------------------------------- criterion 5

void criterion_pooling_oracle() {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<float> dist(-4.f, 4.f);
    bool pass = true;
    for (int fixture = 0; fixture < 100 && pass; ++fixture) {
        int w = 6 + static_cast<int>(rng() % 10);
        int h = 6 + static_cast<int>(rng() % 10);
        int k = 1 + static_cast<int>(rng() % 5);
        int regions = 1 + static_cast<int>(rng() % 6);
        FeatureStack stack;
        stack.width = w;
        stack.height = h;
        stack.channels = k;
        stack.data.resize(static_cast<std::size_t>(w) * h * k);
        for (auto& v : stack.data) v = dist(rng);
        SuperpixelMap map;
        map.width = w;
        map.height = h;
        map.region_count = regions;
        map.labels.resize(static_cast<std::size_t>(w) * h);
        for (int r = 0; r < regions; ++r) map.labels[r] = r;  // non-empty regions
        for (std::size_t i = regions; i < map.labels.size(); ++i)
            map.labels[i] = static_cast<int>(rng() % regions);
        map.region_sizes.assign(regions, 0);
        for (int label : map.labels) ++map.region_sizes[label];

        SuperpixelFeatureTable table = pool_features(stack, map);
        for (int r = 0; r < regions && pass; ++r) {
            for (int ch = 0; ch < k; ++ch) {
                double sum = 0, sumsq = 0;
                std::int64_t n = 0;
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        if (map.at(x, y) != r) continue;
                        double v = stack.at(x, y, ch);
                        sum += v;
                        sumsq += v * v;
                        ++n;
                    }
                double mean = sum / n;
                double sd = std::sqrt(std::max(0.0, sumsq / n - mean * mean));
                float got_mean = table.descriptors[static_cast<std::size_t>(r) * 2 * k + 2 * ch];
                float got_sd = table.descriptors[static_cast<std::size_t>(r) * 2 * k + 2 * ch + 1];
                if (std::abs(got_mean - mean) > 1e-5 || std::abs(got_sd - sd) > 1e-5)
                    pass = false;
                if (n == 1 && got_sd != 0.f) pass = false;
            }
        }
    }
    report(5, pass, "pool_features matches naive per-pixel accumulation on 100 random "
                    "fixtures (1e-5); single-pixel std exactly 0");
}

// ---------------------------------------------------------------- criterion 6

bool slic_partition_ok(const SuperpixelMap& map) {
    if (map.region_count < 1) return false;
    std::vector<std::int64_t> sizes(map.region_count, 0);
    for (int label : map.labels) {
        if (label < 0 || label >= map.region_count) return false;
        ++sizes[label];
    }
    for (int r = 0; r < map.region_count; ++r)
        if (sizes[r] <= 0 || sizes[r] != map.region_sizes[r]) return false;
    // connectivity: flood fill must visit each region exactly once
    std::vector<char> seen(map.labels.size(), 0);
    std::vector<char> done(map.region_count, 0);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        if (seen[i]) continue;
        int label = map.labels[i];
        if (done[label]) return false;
        stack.assign(1, i);
        seen[i] = 1;
        while (!stack.empty()) {
            std::size_t p = stack.back();
            stack.pop_back();
            int x = static_cast<int>(p % map.width), y = static_cast<int>(p / map.width);
            const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                int xx = x + dx[d], yy = y + dy[d];
                if (xx < 0 || xx >= map.width || yy < 0 || yy >= map.height) continue;
                std::size_t q = static_cast<std::size_t>(yy) * map.width + xx;
                if (!seen[q] && map.labels[q] == label) {
                    seen[q] = 1;
                    stack.push_back(q);
                }
            }
        }
        done[label] = 1;
    }
    return true;
}

void criterion_slic_properties() {
    bool pass = true;
    std::mt19937 rng(606);
    for (int trial = 0; trial < 20 && pass; ++trial) {
        Image img;
        img.width = 48 + trial * 2;
        img.height = 40 + trial;
        img.channels = (trial % 2) ? 3 : 1;
        img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
        for (auto& v : img.data) v = static_cast<std::uint8_t>(rng());
        const int n = 30;
        SuperpixelMap a = slic(img, n);
        SuperpixelMap b = slic(img, n);
        if (a.labels != b.labels) pass = false;
        if (!slic_partition_ok(a)) pass = false;
        if (a.region_count < n / 2 || a.region_count > n + n / 2) pass = false;
    }

    // two-half-color image: < 2% majority-color violations
    const int w = 64, h = 64;
    Image halves;
    halves.width = w;
    halves.height = h;
    halves.channels = 1;
    halves.data.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            halves.data[static_cast<std::size_t>(y) * w + x] = x < w / 2 ? 0 : 255;
    SuperpixelMap map = slic(halves, 16);
    std::vector<std::int64_t> white(map.region_count, 0);
    for (std::size_t i = 0; i < halves.data.size(); ++i)
        if (halves.data[i] > 128) ++white[map.labels[i]];
    int violations = 0;
    for (std::size_t i = 0; i < halves.data.size(); ++i) {
        int r = map.labels[i];
        bool region_white = 2 * white[r] > map.region_sizes[r];
        if (region_white != (halves.data[i] > 128)) ++violations;
    }
    if (violations >= 0.02 * w * h) pass = false;
    std::ostringstream what;
    what << "dense/connected/deterministic partitions within [0.5,1.5]x on 20 images; "
         << violations << " two-half violations (< " << static_cast<int>(0.02 * w * h)
         << ")";
    report(6, pass, what.str());
}

// ---------------------------------------------------------------- criterion 7

void criterion_svm_oracle() {
    // four-point 1-D fixture vs dense grid search
    std::vector<std::vector<float>> xs = {{-2.f}, {-1.f}, {1.f}, {2.f}};
    std::vector<std::uint8_t> ys = {0, 0, 1, 1};
    SvmConfig cfg;  // C = 0.5
    LinearExpert e = train_svm(xs, ys, cfg);
    double trained = svm_objective(e, xs, ys, cfg.c);
    double oracle = 1e300;
    for (int wi = -3000; wi <= 3000; ++wi) {
        double w = wi * 1e-3;
        for (int bi = -3000; bi <= 3000; ++bi) {
            double b = bi * 1e-3;
            double obj = 0.5 * w * w;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                double y = ys[i] ? 1.0 : -1.0;
                obj += cfg.c * std::max(0.0, 1.0 - y * (w * xs[i][0] + b));
            }
            oracle = std::min(oracle, obj);
        }
    }
    bool pass = trained <= oracle * 1.01 + 1e-12;

    // 50 random separable sets, margin >= 0.1, zero training error
    std::mt19937 rng(707);
    std::uniform_real_distribution<float> dist(-1.f, 1.f);
    for (int trial = 0; trial < 50 && pass; ++trial) {
        std::vector<std::vector<float>> sx;
        std::vector<std::uint8_t> sy;
        for (int i = 0; i < 20; ++i) {
            bool posc = i % 2 == 0;
            sx.push_back({dist(rng) + (posc ? 1.6f : -1.6f), dist(rng)});
            sy.push_back(posc ? 1 : 0);
        }
        SvmConfig c2;
        c2.seed = static_cast<std::uint64_t>(trial);
        LinearExpert trained_e = train_svm(sx, sy, c2);
        for (std::size_t i = 0; i < sx.size(); ++i)
            if ((svm_score(trained_e, sx[i]) > 0) != (sy[i] == 1)) pass = false;
    }
    std::ostringstream what;
    what << "objective " << trained << " within 1% of grid optimum " << oracle
         << "; zero error on 50 separable sets";
    report(7, pass, what.str());
}

// ---------------------------------------------------------------- criterion 8

void criterion_metric_oracle() {
    std::mt19937 rng(808);
    std::uniform_real_distribution<float> unit(0.f, 1.f);
    bool pass = true;
    for (int fixture = 0; fixture < 50 && pass; ++fixture) {
        ConfidenceMap pred;
        pred.width = 24;
        pred.height = 24;
        pred.data.resize(576);
        for (auto& v : pred.data) v = unit(rng);
        LabelMask gt;
        gt.width = 24;
        gt.height = 24;
        gt.data.resize(576);
        for (auto& v : gt.data) v = static_cast<std::uint8_t>(rng() & 1);

        MetricsReport got = evaluate({pred}, {gt});

        // brute-force confusion counts per swept threshold
        double best_f = -1.0;
        int best_t = 0;
        std::int64_t tp[256] = {}, fp[256] = {}, tn[256] = {}, fn[256] = {};
        std::int64_t correct = 0;
        for (std::size_t i = 0; i < pred.data.size(); ++i) {
            if ((pred.data[i] >= 0.5f ? 1 : 0) == gt.data[i]) ++correct;
            for (int t = 0; t < 256; ++t) {
                bool p = pred.data[i] >= static_cast<float>(t) / 255.f;
                if (p && gt.data[i]) ++tp[t];
                else if (p) ++fp[t];
                else if (gt.data[i]) ++fn[t];
                else ++tn[t];
            }
        }
        std::vector<double> precisions(256), recalls(256);
        for (int t = 0; t < 256; ++t) {
            precisions[t] = (tp[t] + fp[t]) > 0 ? static_cast<double>(tp[t]) / (tp[t] + fp[t]) : 1.0;
            recalls[t] = (tp[t] + fn[t]) > 0 ? static_cast<double>(tp[t]) / (tp[t] + fn[t]) : 0.0;
            double f = (precisions[t] + recalls[t]) > 0
                           ? 2.0 * precisions[t] * recalls[t] / (precisions[t] + recalls[t])
                           : 0.0;
            if (f > best_f) {
                best_f = f;
                best_t = t;
            }
            if (got.curve[t].precision != precisions[t] || got.curve[t].recall != recalls[t])
                pass = false;
        }
        double ap = 0.0;
        for (int t = 0; t + 1 < 256; ++t)
            ap += (recalls[t] - recalls[t + 1]) * 0.5 * (precisions[t] + precisions[t + 1]);
        if (got.max_f != 100.0 * best_f) pass = false;
        if (got.threshold_at_maxf != best_t / 255.0) pass = false;
        if (got.average_precision != 100.0 * ap) pass = false;
        if (got.accuracy != 100.0 * static_cast<double>(correct) / 576.0) pass = false;
        if (got.fpr_at_maxf !=
            100.0 * ((fp[best_t] + tn[best_t]) > 0
                         ? static_cast<double>(fp[best_t]) / (fp[best_t] + tn[best_t])
                         : 0.0))
            pass = false;
        if (got.fnr_at_maxf !=
            100.0 * ((fn[best_t] + tp[best_t]) > 0
                         ? static_cast<double>(fn[best_t]) / (fn[best_t] + tp[best_t])
                         : 0.0))
            pass = false;
    }

    // perfect prediction
    LabelMask gt;
    gt.width = 16;
    gt.height = 16;
    gt.data.resize(256);
    for (auto& v : gt.data) v = static_cast<std::uint8_t>(rng() & 1);
    ConfidenceMap perfect;
    perfect.width = 16;
    perfect.height = 16;
    for (auto v : gt.data) perfect.data.push_back(static_cast<float>(v));
    MetricsReport r = evaluate({perfect}, {gt});
    if (r.max_f != 100.0 || r.fpr_at_maxf != 0.0 || r.fnr_at_maxf != 0.0) pass = false;
    report(8, pass, "evaluate matches brute-force confusion counts exactly on 50 random "
                    "fixtures; perfect prediction -> MaxF 100, FPR = FNR = 0");
}

// --------------------------------------------- end-to-end shared state (9-12)

struct EndToEnd {
    fs::path work;
    fs::path dataset;
    KernelBank bank;
    ScaleSet scales;  // defaults 400, 800, 1200
    TrainedPipeline expert;
    double train_seconds = 0.0;
    std::vector<Image> test_images;
    std::vector<LabelMask> test_masks;
    std::vector<ConfidenceMap> expert_preds;
};

ForestConfig default_forest_config() {
    ForestConfig cfg;  // T=10, l=10, candidates=10, C=0.5 defaults
    cfg.seed = 20;
    cfg.svm.seed = 20;
    return cfg;
}

EndToEnd build_end_to_end(const fs::path& work) {
    EndToEnd e2e;
    e2e.work = work;
    e2e.dataset = work / "dataset";
    fs::remove_all(e2e.dataset);
    testsupport::write_synthetic_dataset(e2e.dataset.string(), 20, 20, 999);
    e2e.bank = testsupport::make_gabor_bank();

    set_num_threads(8);
    auto t0 = clk::now();
    DatasetIndex train = load_dataset_index(e2e.dataset.string(), "train");
    e2e.expert = train_pipeline(train, e2e.bank, e2e.scales, default_forest_config());
    e2e.train_seconds = std::chrono::duration<double>(clk::now() - t0).count();

    DatasetIndex test = load_dataset_index(e2e.dataset.string(), "test");
    for (const auto& pair : test.pairs) {
        e2e.test_images.push_back(load_image(pair.image_path));
        e2e.test_masks.push_back(load_mask(pair.mask_path));
        e2e.expert_preds.push_back(predict_image(e2e.test_images.back(), e2e.bank,
                                                 e2e.expert.models, e2e.scales,
                                                 e2e.expert.prior));
    }
    return e2e;
}

// ---------------------------------------------------------------- criterion 9

void criterion_scale_pooling(const EndToEnd& e2e) {
    // unit prior isolates the pooled map; pooled must equal the in-order mean
    // of the per-scale maps at the bit level
    PriorMask unit;
    unit.width = e2e.test_images[0].width;
    unit.height = e2e.test_images[0].height;
    unit.data.assign(static_cast<std::size_t>(unit.width) * unit.height, 1.f);
    bool pass = true;
    for (int img = 0; img < 3 && pass; ++img) {
        std::vector<ConfidenceMap> per_scale;
        ConfidenceMap pooled = predict_image(e2e.test_images[img], e2e.bank,
                                             e2e.expert.models, e2e.scales, unit,
                                             &per_scale);
        if (per_scale.size() != e2e.scales.counts.size()) {
            pass = false;
            break;
        }
        float inv = 1.f / static_cast<float>(per_scale.size());
        for (std::size_t i = 0; i < pooled.data.size(); ++i) {
            float acc = 0.f;
            for (const auto& m : per_scale) acc += m.data[i];
            if (pooled.data[i] != acc * inv) pass = false;
        }
    }
    report(9, pass, "pooled confidence equals the fixed-order per-pixel mean of the "
                    "per-scale maps, bit-exactly");
}

// --------------------------------------------------------------- criterion 10

MetricsReport evaluate_variant(const EndToEnd& e2e, const std::vector<ConfidenceMap>& preds) {
    return evaluate(preds, e2e.test_masks);
}

void criterion_end_to_end(const EndToEnd& e2e, double* expert_maxf, double* stump_maxf) {
    MetricsReport r = evaluate_variant(e2e, e2e.expert_preds);
    *expert_maxf = r.max_f;

    // axis-aligned stump forest, identical seed and data
    DatasetIndex train = load_dataset_index(e2e.dataset.string(), "train");
    ForestConfig stump_cfg = default_forest_config();
    stump_cfg.split_kind = SplitKind::kAxisStump;
    TrainedPipeline stump = train_pipeline(train, e2e.bank, e2e.scales, stump_cfg);
    std::vector<ConfidenceMap> stump_preds;
    for (const Image& img : e2e.test_images)
        stump_preds.push_back(
            predict_image(img, e2e.bank, stump.models, e2e.scales, stump.prior));
    MetricsReport rs = evaluate_variant(e2e, stump_preds);
    *stump_maxf = rs.max_f;

    bool pass = r.accuracy >= 90.0 && r.max_f >= 90.0 && r.max_f >= rs.max_f &&
                e2e.train_seconds < 600.0;
    std::ostringstream what;
    what << "accuracy " << r.accuracy << "%, MaxF " << r.max_f << "% (stump MaxF "
         << rs.max_f << "%), training " << e2e.train_seconds << " s";
    report(10, pass, what.str());
}

// --------------------------------------------------------------- criterion 11

void criterion_latency(const EndToEnd& e2e) {
    // one image's tables: <= 1200 regions x 3 scales
    const Image& image = e2e.test_images[0];
    FeatureStack stack = extract_hypercolumns(image, e2e.bank);
    std::vector<SuperpixelFeatureTable> tables;
    std::size_t regions = 0;
    for (int scale : e2e.scales.counts) {
        SuperpixelMap map = slic(image, scale);
        tables.push_back(pool_features(stack, map));
        regions += static_cast<std::size_t>(tables.back().region_count);
    }
    set_num_threads(1);
    volatile double sink = 0.0;
    auto t0 = clk::now();
    for (std::size_t s = 0; s < tables.size(); ++s)
        for (int r = 0; r < tables[s].region_count; ++r)
            sink = sink + predict(e2e.expert.models[s], tables[s].descriptor(r),
                                  tables[s].feature_dim);
    double ms = std::chrono::duration<double, std::milli>(clk::now() - t0).count();
    set_num_threads(8);
    std::ostringstream what;
    what << "forest prediction over " << regions << " regions in " << ms
         << " ms single-threaded (< 100 ms)";
    report(11, ms < 100.0, what.str());
}

// --------------------------------------------------------------- criterion 12

void criterion_determinism(const EndToEnd& e2e) {
    bool pass = true;

    // criterion 2's forest, 1 vs 8 worker threads
    SampleSet set = make_wide_sample_set(4000, 64, 77);
    ForestConfig cfg;
    cfg.seed = 3;
    cfg.svm.seed = 3;
    set_num_threads(1);
    auto bytes1 = serialize_forest(train_forest(set, cfg), e2e.work / "det_forest_1.rfle");
    set_num_threads(8);
    auto bytes8 = serialize_forest(train_forest(set, cfg), e2e.work / "det_forest_8.rfle");
    if (bytes1.empty() || bytes1 != bytes8) pass = false;

    // criterion 10's pipeline rerun single-threaded: identical model files and
    // confidence maps
    set_num_threads(1);
    DatasetIndex train = load_dataset_index(e2e.dataset.string(), "train");
    TrainedPipeline rerun = train_pipeline(train, e2e.bank, e2e.scales,
                                           default_forest_config());
    for (std::size_t s = 0; s < e2e.scales.counts.size() && pass; ++s) {
        auto a = serialize_forest(e2e.expert.models[s], e2e.work / "det_scale_a.rfle");
        auto b = serialize_forest(rerun.models[s], e2e.work / "det_scale_b.rfle");
        if (a != b) pass = false;
    }
    for (std::size_t i = 0; i < e2e.test_images.size() && pass; ++i) {
        ConfidenceMap conf = predict_image(e2e.test_images[i], e2e.bank, rerun.models,
                                           e2e.scales, rerun.prior);
        save_confidence(conf, (e2e.work / "det_conf_1.pgm").string());
        save_confidence(e2e.expert_preds[i], (e2e.work / "det_conf_8.pgm").string());
        if (read_bytes((e2e.work / "det_conf_1.pgm").string()) !=
            read_bytes((e2e.work / "det_conf_8.pgm").string()))
            pass = false;
    }
    set_num_threads(8);
    report(12, pass, "byte-identical model files and confidence maps with the same "
                     "seed at 1 vs 8 worker threads");
}

}  // namespace

int main() {
    fs::path work = fs::temp_directory_path() / "roadseg_acceptance";
    fs::create_directories(work);

    criterion_memory_model();
    criterion_size_bound(work);
    criterion_gain_oracle();
    criterion_threshold_oracle();
    criterion_pooling_oracle();
    criterion_slic_properties();
    criterion_svm_oracle();
    criterion_metric_oracle();

    EndToEnd e2e = build_end_to_end(work);
    criterion_scale_pooling(e2e);
    double expert_maxf = 0.0, stump_maxf = 0.0;
    criterion_end_to_end(e2e, &expert_maxf, &stump_maxf);
    criterion_latency(e2e);
    criterion_determinism(e2e);

    if (g_failures) {
        std::cout << g_failures << " criteria failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
