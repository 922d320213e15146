#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadseg/superpix.hpp"
#include "roadseg/svm.hpp"

namespace roadseg {

// phi: the kernel channels a node's expert sees. Each kernel contributes its
// (mean, std) descriptor pair at positions (2k, 2k+1).
struct FeatureSelection {
    std::vector<int> kernel_ids;  // distinct, in [0, K)

    std::vector<int> descriptor_indices() const {
        std::vector<int> idx;
        idx.reserve(kernel_ids.size() * 2);
        for (int k : kernel_ids) {
            idx.push_back(2 * k);
            idx.push_back(2 * k + 1);
        }
        return idx;
    }
};

struct TreeNode {
    enum Kind : std::uint8_t { kSplit = 0, kLeaf = 1 };
    Kind kind = kLeaf;
    // split
    FeatureSelection selection;
    LinearExpert expert;
    float threshold = 0.f;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    // leaf
    float posterior = 0.f;
    std::uint32_t sample_count = 0;
};

enum class SplitKind {
    kLocalExpert,  // linear SVM over the selected (mean, std) pairs
    kAxisStump,    // identity on a single descriptor coordinate
};

struct ForestConfig {
    int num_trees = 10;
    int max_depth = 10;        // decision levels
    int num_candidates = 10;
    int min_samples_leaf = 10;
    double min_gain = 1e-6;
    bool bagging = true;
    std::uint64_t seed = 0;
    SplitKind split_kind = SplitKind::kLocalExpert;
    SvmConfig svm;
};

struct ForestModel {
    std::vector<std::vector<TreeNode>> trees;
    ForestConfig config;
    int kernel_count = 0;  // K; descriptor dim is 2K
};

// Shannon entropy, base 2, with 0*log(0) := 0.
double entropy(const std::vector<std::int64_t>& counts);
double entropy2(std::int64_t a, std::int64_t b);

// Parent entropy minus size-weighted child entropies.
double information_gain(std::int64_t parent_pos, std::int64_t parent_neg,
                        std::int64_t left_pos, std::int64_t left_neg,
                        std::int64_t right_pos, std::int64_t right_neg);

struct CandidateResult {
    LinearExpert expert;
    float threshold = 0.f;
    double gain = 0.0;
};

// Trains the expert on the phi-projected samples, then sweeps candidate
// thresholds over the resulting scores (midpoints of consecutive distinct
// sorted scores when <= 64 distinct, else 64 quantiles, plus tau = 0) and
// returns the threshold maximizing information gain of the partition
// {score <= tau -> left, score > tau -> right}.
CandidateResult evaluate_candidate(const std::vector<std::vector<float>>& projected,
                                   const std::vector<std::uint8_t>& labels,
                                   const SvmConfig& svm_config);

// Training sample matrix: N rows of dim 2K descriptors plus binary labels.
struct SampleSet {
    int dim = 0;
    std::vector<float> features;        // N * dim, row-major
    std::vector<std::uint8_t> labels;   // N

    std::size_t size() const { return labels.size(); }
    const float* row(std::size_t i) const { return features.data() + i * dim; }
};

std::vector<TreeNode> train_tree(const SampleSet& samples, const ForestConfig& config,
                                 std::uint64_t tree_seed);

ForestModel train_forest(const std::vector<SuperpixelFeatureTable>& tables,
                         const ForestConfig& config);
ForestModel train_forest(const SampleSet& samples, const ForestConfig& config);

// Mean of leaf posteriors across trees; routing is score <= tau -> left.
double predict(const ForestModel& model, const float* descriptor, int dim);
double predict(const ForestModel& model, const std::vector<float>& descriptor);

// Worst-case forest size in bytes: T * 2^l * (2*K_max + 1) * float_bytes.
std::uint64_t estimate_memory(int num_trees, int max_depth, int k_max, int float_bytes);

// RFLE file format (little-endian).
void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

}  // namespace roadseg
