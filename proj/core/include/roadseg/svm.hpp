#pragma once

#include <cstdint>
#include <vector>

namespace roadseg {

// Node-local linear expert: score(x) = bias + w . x
struct LinearExpert {
    std::vector<float> weights;
    float bias = 0.f;

    int dim() const { return static_cast<int>(weights.size()); }
};

struct SvmConfig {
    double c = 0.5;
    int max_epochs = 100;  // non-separable node solves hit the cap; the
                           // projected-gradient stop usually fires far earlier
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
    int max_node_samples = 2000;
};

// L2-regularized L1-loss SVM, 1/2|w|^2 + C sum hinge(y_i (w.x_i + b)),
// solved by dual coordinate descent with seeded permutations; the bias is an
// augmented constant feature. Deterministic for fixed inputs and seed. If
// more than max_node_samples rows are given, trains on a seeded uniform
// subsample. Labels are {0,1}; both classes must be present.
// objective_trace, when given, receives -dual(alpha) after each epoch; the
// sequence is non-increasing and converges to the negated primal optimum.
LinearExpert train_svm(const std::vector<std::vector<float>>& samples,
                       const std::vector<std::uint8_t>& labels,
                       const SvmConfig& config,
                       std::vector<double>* objective_trace = nullptr);

double svm_score(const LinearExpert& expert, const float* x, int dim);
double svm_score(const LinearExpert& expert, const std::vector<float>& x);

// Primal objective of (w, b) on the given data, for diagnostics and tests.
double svm_objective(const LinearExpert& expert,
                     const std::vector<std::vector<float>>& samples,
                     const std::vector<std::uint8_t>& labels, double c);

}  // namespace roadseg
