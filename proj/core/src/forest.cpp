#include "roadseg/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "roadseg/parallel.hpp"

namespace roadseg {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d4a08885ebb6b7ull;
    return z ^ (z >> 31);
}

std::uint64_t tree_seed_for(std::uint64_t forest_seed, int tree_index) {
    return mix64(forest_seed ^ mix64(static_cast<std::uint64_t>(tree_index) + 1));
}

double plogp(double p) { return p > 0 ? p * std::log2(p) : 0.0; }

}  // namespace

double entropy2(std::int64_t a, std::int64_t b) {
    std::int64_t total = a + b;
    if (total <= 0) throw std::invalid_argument("entropy: empty set");
    double pa = static_cast<double>(a) / total;
    double pb = static_cast<double>(b) / total;
    return -(plogp(pa) + plogp(pb));
}

double entropy(const std::vector<std::int64_t>& counts) {
    std::int64_t total = 0;
    for (std::int64_t c : counts) {
        if (c < 0) throw std::invalid_argument("entropy: negative count");
        total += c;
    }
    if (total <= 0) throw std::invalid_argument("entropy: empty set");
    double h = 0.0;
    for (std::int64_t c : counts) h -= plogp(static_cast<double>(c) / total);
    return h;
}

double information_gain(std::int64_t parent_pos, std::int64_t parent_neg,
                        std::int64_t left_pos, std::int64_t left_neg,
                        std::int64_t right_pos, std::int64_t right_neg) {
    if (left_pos + right_pos != parent_pos || left_neg + right_neg != parent_neg)
        throw std::invalid_argument("information_gain: children do not partition the parent");
    std::int64_t total = parent_pos + parent_neg;
    std::int64_t nl = left_pos + left_neg;
    std::int64_t nr = right_pos + right_neg;
    double gain = entropy2(parent_pos, parent_neg);
    if (nl > 0) gain -= (static_cast<double>(nl) / total) * entropy2(left_pos, left_neg);
    if (nr > 0) gain -= (static_cast<double>(nr) / total) * entropy2(right_pos, right_neg);
    return gain;
}

namespace {

// Sweeps candidate thresholds over the scores and returns the (tau, gain)
// maximizing information gain of {score <= tau -> left}. Thresholds are
// midpoints of consecutive distinct sorted scores when <= 64 distinct,
// else 64 evenly spaced score quantiles; tau = 0 is appended and only wins
// on strictly greater gain. Thresholds are evaluated after rounding to f32
// so training-time partitions match serialized routing.
std::pair<float, double> sweep_threshold(const std::vector<double>& scores,
                                         const std::vector<std::uint8_t>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> sorted(n);
    std::vector<std::int64_t> pos_prefix(n + 1, 0);
    std::int64_t total_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sorted[i] = scores[order[i]];
        total_pos += labels[order[i]] ? 1 : 0;
        pos_prefix[i + 1] = pos_prefix[i] + (labels[order[i]] ? 1 : 0);
    }
    const std::int64_t total = static_cast<std::int64_t>(n);
    const std::int64_t total_neg = total - total_pos;

    std::vector<double> distinct;
    distinct.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (i == 0 || sorted[i] != sorted[i - 1]) distinct.push_back(sorted[i]);

    std::vector<float> candidates;
    if (distinct.size() >= 2) {
        if (distinct.size() <= 64) {
            for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
                candidates.push_back(static_cast<float>(0.5 * (distinct[i] + distinct[i + 1])));
        } else {
            for (int i = 1; i <= 64; ++i) {
                std::size_t pos = (static_cast<std::size_t>(i) * (n - 1)) / 65;
                candidates.push_back(static_cast<float>(sorted[pos]));
            }
            candidates.erase(std::unique(candidates.begin(), candidates.end()),
                             candidates.end());
        }
    }

    auto gain_at = [&](float tau) {
        std::size_t nl = static_cast<std::size_t>(
            std::upper_bound(sorted.begin(), sorted.end(), static_cast<double>(tau)) -
            sorted.begin());
        std::int64_t lp = pos_prefix[nl];
        std::int64_t ln = static_cast<std::int64_t>(nl) - lp;
        return information_gain(total_pos, total_neg, lp, ln, total_pos - lp, total_neg - ln);
    };

    float best_tau = distinct.empty() ? 0.f : static_cast<float>(distinct.front());
    double best_gain = 0.0;
    bool have_best = false;
    for (float tau : candidates) {
        double g = gain_at(tau);
        if (!have_best || g > best_gain) {
            have_best = true;
            best_gain = g;
            best_tau = tau;
        }
    }
    // The SVM's natural boundary, kept only on strict improvement.
    if (!distinct.empty() && distinct.front() <= 0.0 && distinct.back() > 0.0) {
        double g = gain_at(0.f);
        if (g > best_gain) {
            best_gain = g;
            best_tau = 0.f;
        }
    }
    return {best_tau, best_gain};
}

}  // namespace

CandidateResult evaluate_candidate(const std::vector<std::vector<float>>& projected,
                                   const std::vector<std::uint8_t>& labels,
                                   const SvmConfig& svm_config) {
    CandidateResult result;
    result.expert = train_svm(projected, labels, svm_config);
    std::vector<double> scores(projected.size());
    for (std::size_t i = 0; i < projected.size(); ++i)
        scores[i] = svm_score(result.expert, projected[i]);
    auto [tau, gain] = sweep_threshold(scores, labels);
    result.threshold = tau;
    result.gain = gain;
    return result;
}

namespace {

struct TreeBuilder {
    const SampleSet& samples;
    const ForestConfig& config;
    int kernel_count;
    std::mt19937_64 rng;
    std::vector<TreeNode> nodes;

    TreeBuilder(const SampleSet& s, const ForestConfig& c, std::uint64_t seed)
        : samples(s), config(c), kernel_count(s.dim / 2), rng(seed) {}

    std::uint32_t build(const std::vector<std::size_t>& rows, int depth) {
        std::int64_t pos = 0;
        for (std::size_t r : rows) pos += samples.labels[r] ? 1 : 0;
        std::int64_t neg = static_cast<std::int64_t>(rows.size()) - pos;

        std::uint32_t index = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();

        bool must_leaf = depth >= config.max_depth || pos == 0 || neg == 0 ||
                         rows.size() < 2 * static_cast<std::size_t>(config.min_samples_leaf);
        CandidateResult best;
        FeatureSelection best_selection;
        bool have_split = false;
        if (!must_leaf) {
            // All candidate selections and solver seeds are drawn up front so
            // the stream consumption per node is fixed.
            struct Candidate {
                FeatureSelection selection;
                std::uint64_t svm_seed;
            };
            std::vector<Candidate> candidates(config.num_candidates);
            for (auto& cand : candidates) {
                cand.selection = draw_selection();
                cand.svm_seed = rng();
            }
            for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
                CandidateResult res = evaluate(rows, candidates[ci]. selection,
                                               candidates[ci].svm_seed);
                if (!have_split || res.gain > best.gain) {
                    have_split = true;  // tie -> lowest candidate index
                    best = res;
                    best_selection = candidates[ci].selection;
                }
            }
            if (!have_split || best.gain < config.min_gain) must_leaf = true;
        }

        if (must_leaf) {
            TreeNode& leaf = nodes[index];
            leaf.kind = TreeNode::kLeaf;
            // Laplace smoothing
            leaf.posterior = static_cast<float>(
                (static_cast<double>(pos) + 1.0) / (static_cast<double>(rows.size()) + 2.0));
            leaf.sample_count = static_cast<std::uint32_t>(rows.size());
            return index;
        }

        std::vector<std::size_t> left_rows, right_rows;
        std::vector<int> coords = best_selection.descriptor_indices();
        std::vector<float> proj(coords.size());
        for (std::size_t r : rows) {
            const float* row = samples.row(r);
            for (std::size_t d = 0; d < coords.size(); ++d) proj[d] = row[coords[d]];
            double s = svm_score(best.expert, proj.data(), static_cast<int>(proj.size()));
            (s <= static_cast<double>(best.threshold) ? left_rows : right_rows).push_back(r);
        }

        nodes[index].kind = TreeNode::kSplit;
        nodes[index].selection = best_selection;
        nodes[index].expert = best.expert;
        nodes[index].threshold = best.threshold;
        std::uint32_t left = build(left_rows, depth + 1);
        std::uint32_t right = build(right_rows, depth + 1);
        nodes[index].left = left;
        nodes[index].right = right;
        return index;
    }

    FeatureSelection draw_selection() {
        FeatureSelection sel;
        if (config.split_kind == SplitKind::kAxisStump) {
            // one descriptor coordinate, expressed as a kernel plus a fixed
            // unit weight on its mean or std slot
            std::uniform_int_distribution<int> coord_dist(0, samples.dim - 1);
            int coord = coord_dist(rng);
            sel.kernel_ids.push_back(coord / 2);
            sel.kernel_ids.push_back(-(coord % 2) - 1);  // marker, consumed by evaluate
            return sel;
        }
        int k_cap = std::min(kernel_count, 8);
        std::uniform_int_distribution<int> count_dist(1, k_cap);
        int k = count_dist(rng);
        std::vector<int> ids(kernel_count);
        std::iota(ids.begin(), ids.end(), 0);
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<int> pick(i, kernel_count - 1);
            std::swap(ids[i], ids[pick(rng)]);
        }
        sel.kernel_ids.assign(ids.begin(), ids.begin() + k);
        std::sort(sel.kernel_ids.begin(), sel.kernel_ids.end());
        return sel;
    }

    CandidateResult evaluate(const std::vector<std::size_t>& rows,
                             FeatureSelection& selection, std::uint64_t svm_seed) {
        if (config.split_kind == SplitKind::kAxisStump) {
            // decode the marker: second entry encodes mean (0) vs std (1)
            int slot = -selection.kernel_ids[1] - 1;
            selection.kernel_ids.pop_back();
            int coord = 2 * selection.kernel_ids[0] + slot;
            CandidateResult result;
            result.expert.weights = slot == 0 ? std::vector<float>{1.f, 0.f}
                                              : std::vector<float>{0.f, 1.f};
            result.expert.bias = 0.f;
            std::vector<double> scores(rows.size());
            std::vector<std::uint8_t> labels(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                scores[i] = samples.row(rows[i])[coord];
                labels[i] = samples.labels[rows[i]];
            }
            auto [tau, gain] = sweep_threshold(scores, labels);
            result.threshold = tau;
            result.gain = gain;
            return result;
        }
        std::vector<int> coords = selection.descriptor_indices();
        std::vector<std::vector<float>> projected(rows.size());
        std::vector<std::uint8_t> labels(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const float* row = samples.row(rows[i]);
            auto& p = projected[i];
            p.resize(coords.size());
            for (std::size_t d = 0; d < coords.size(); ++d) p[d] = row[coords[d]];
            labels[i] = samples.labels[rows[i]];
        }
        SvmConfig svm = config.svm;
        svm.seed = svm_seed;
        return evaluate_candidate(projected, labels, svm);
    }
};

std::vector<TreeNode> train_tree_rows(const SampleSet& samples, const ForestConfig& config,
                                      std::uint64_t tree_seed,
                                      const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw std::invalid_argument("train_tree: empty input");
    TreeBuilder builder(samples, config, tree_seed);
    builder.build(rows, 0);
    return std::move(builder.nodes);
}

}  // namespace

std::vector<TreeNode> train_tree(const SampleSet& samples, const ForestConfig& config,
                                 std::uint64_t tree_seed) {
    std::vector<std::size_t> rows(samples.size());
    std::iota(rows.begin(), rows.end(), 0);
    return train_tree_rows(samples, config, tree_seed, rows);
}

ForestModel train_forest(const SampleSet& samples, const ForestConfig& config) {
    if (samples.size() == 0) throw std::invalid_argument("train_forest: no labeled data");
    ForestModel model;
    model.config = config;
    model.kernel_count = samples.dim / 2;
    model.trees.resize(config.num_trees);
    parallel_for(static_cast<std::size_t>(config.num_trees), [&](std::size_t t) {
        std::uint64_t seed = tree_seed_for(config.seed, static_cast<int>(t));
        std::vector<std::size_t> rows;
        if (config.bagging) {
            std::mt19937_64 bag_rng(mix64(seed ^ 0xba99b0075ull));
            std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
            rows.resize(samples.size());
            for (auto& r : rows) r = pick(bag_rng);
        } else {
            rows.resize(samples.size());
            std::iota(rows.begin(), rows.end(), 0);
        }
        model.trees[t] = train_tree_rows(samples, config, seed, rows);
    });
    return model;
}

ForestModel train_forest(const std::vector<SuperpixelFeatureTable>& tables,
                         const ForestConfig& config) {
    SampleSet samples;
    for (const auto& table : tables) {
        if (table.labels.empty()) continue;
        if (samples.dim == 0) samples.dim = table.feature_dim;
        if (table.feature_dim != samples.dim)
            throw std::invalid_argument("train_forest: inconsistent descriptor dims");
        samples.features.insert(samples.features.end(), table.descriptors.begin(),
                                table.descriptors.end());
        samples.labels.insert(samples.labels.end(), table.labels.begin(), table.labels.end());
    }
    if (samples.labels.empty()) throw std::invalid_argument("train_forest: no labeled data");
    return train_forest(samples, config);
}

double predict(const ForestModel& model, const float* descriptor, int dim) {
    if (dim != 2 * model.kernel_count)
        throw std::invalid_argument("predict: descriptor dimension mismatch");
    double sum = 0.0;
    std::vector<float> proj;
    for (const auto& tree : model.trees) {
        std::uint32_t idx = 0;
        for (;;) {
            const TreeNode& node = tree[idx];
            if (node.kind == TreeNode::kLeaf) {
                sum += node.posterior;
                break;
            }
            proj.clear();
            for (int k : node.selection.kernel_ids) {
                proj.push_back(descriptor[2 * k]);
                proj.push_back(descriptor[2 * k + 1]);
            }
            double s = svm_score(node.expert, proj.data(), static_cast<int>(proj.size()));
            idx = s <= static_cast<double>(node.threshold) ? node.left : node.right;
        }
    }
    return sum / static_cast<double>(model.trees.size());
}

double predict(const ForestModel& model, const std::vector<float>& descriptor) {
    return predict(model, descriptor.data(), static_cast<int>(descriptor.size()));
}

std::uint64_t estimate_memory(int num_trees, int max_depth, int k_max, int float_bytes) {
    if (num_trees < 1 || max_depth < 1 || k_max < 1 || float_bytes < 1)
        throw std::invalid_argument("estimate_memory: all arguments must be >= 1");
    if (max_depth >= 64) throw std::overflow_error("estimate_memory: depth too large");
    unsigned __int128 v = static_cast<unsigned __int128>(num_trees);
    v *= (static_cast<unsigned __int128>(1) << max_depth);
    v *= static_cast<unsigned __int128>(2) * k_max + 1;
    v *= static_cast<unsigned __int128>(float_bytes);
    if (v > std::numeric_limits<std::uint64_t>::max())
        throw std::overflow_error("estimate_memory: result exceeds 64 bits");
    return static_cast<std::uint64_t>(v);
}

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
        throw std::runtime_error(std::string("truncated model file while reading ") + what);
    return value;
}

}  // namespace

void save_model(const ForestModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.write("RFLE", 4);
    write_le<std::uint32_t>(out, 1);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.trees.size()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.kernel_count));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.config.max_depth));
    for (const auto& tree : model.trees) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.size()));
        for (const TreeNode& node : tree) {
            write_le<std::uint8_t>(out, static_cast<std::uint8_t>(node.kind));
            if (node.kind == TreeNode::kSplit) {
                write_le<std::uint32_t>(out,
                                        static_cast<std::uint32_t>(node.selection.kernel_ids.size()));
                for (int k : node.selection.kernel_ids)
                    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(k));
                for (float w : node.expert.weights) write_le<float>(out, w);
                write_le<float>(out, node.expert.bias);
                write_le<float>(out, node.threshold);
                write_le<std::uint32_t>(out, node.left);
                write_le<std::uint32_t>(out, node.right);
            } else {
                write_le<float>(out, node.posterior);
                write_le<std::uint32_t>(out, node.sample_count);
            }
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

ForestModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "RFLE", 4) != 0)
        throw std::runtime_error("bad magic in " + path);
    std::uint32_t version = read_le<std::uint32_t>(in, "version");
    if (version != 1) throw std::runtime_error("unsupported RFLE version in " + path);
    ForestModel model;
    std::uint32_t num_trees = read_le<std::uint32_t>(in, "tree count");
    model.kernel_count = static_cast<int>(read_le<std::uint32_t>(in, "kernel count"));
    model.config.max_depth = static_cast<int>(read_le<std::uint32_t>(in, "max depth"));
    model.config.num_trees = static_cast<int>(num_trees);
    model.trees.resize(num_trees);
    for (auto& tree : model.trees) {
        std::uint32_t count = read_le<std::uint32_t>(in, "node count");
        tree.resize(count);
        for (TreeNode& node : tree) {
            std::uint8_t kind = read_le<std::uint8_t>(in, "node kind");
            if (kind == TreeNode::kSplit) {
                node.kind = TreeNode::kSplit;
                std::uint32_t nk = read_le<std::uint32_t>(in, "kernel selection size");
                node.selection.kernel_ids.resize(nk);
                for (auto& k : node.selection.kernel_ids)
                    k = static_cast<int>(read_le<std::uint32_t>(in, "kernel id"));
                node.expert.weights.resize(2 * nk);
                for (auto& w : node.expert.weights) w = read_le<float>(in, "weight");
                node.expert.bias = read_le<float>(in, "bias");
                node.threshold = read_le<float>(in, "threshold");
                node.left = read_le<std::uint32_t>(in, "left child");
                node.right = read_le<std::uint32_t>(in, "right child");
                if (node.left >= count || node.right >= count)
                    throw std::runtime_error("corrupt model: child index out of range: " + path);
            } else if (kind == TreeNode::kLeaf) {
                node.kind = TreeNode::kLeaf;
                node.posterior = read_le<float>(in, "posterior");
                node.sample_count = read_le<std::uint32_t>(in, "sample count");
            } else {
                throw std::runtime_error("corrupt model: unknown node kind: " + path);
            }
        }
        if (tree.empty()) throw std::runtime_error("corrupt model: empty tree: " + path);
    }
    return model;
}

}  // namespace roadseg
