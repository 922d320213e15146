#include "roadseg/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace roadseg {

namespace {

// splitmix64, for deriving independent stream seeds.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d4a08885ebb6b7ull;
    return z ^ (z >> 31);
}

}  // namespace

LinearExpert train_svm(const std::vector<std::vector<float>>& samples,
                       const std::vector<std::uint8_t>& labels,
                       const SvmConfig& config,
                       std::vector<double>* objective_trace) {
    const std::size_t total = samples.size();
    if (total < 2 || labels.size() != total)
        throw std::invalid_argument("train_svm: need >= 2 labeled samples");
    bool has_pos = false, has_neg = false;
    for (std::uint8_t l : labels) (l ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train_svm: both classes must be present");
    const int dim = static_cast<int>(samples[0].size());
    if (dim < 1) throw std::invalid_argument("train_svm: empty feature vectors");

    std::mt19937_64 rng(mix64(config.seed));

    // Seeded uniform subsample when the node is oversized.
    std::vector<std::size_t> rows(total);
    std::iota(rows.begin(), rows.end(), 0);
    if (config.max_node_samples > 0 &&
        total > static_cast<std::size_t>(config.max_node_samples)) {
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(config.max_node_samples);
        std::sort(rows.begin(), rows.end());
    }
    const std::size_t n = rows.size();

    // Bias via augmented constant feature; y in {-1,+1}.
    std::vector<double> y(n);
    std::vector<double> qdiag(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = samples[rows[i]];
        if (static_cast<int>(x.size()) != dim)
            throw std::invalid_argument("train_svm: ragged feature matrix");
        double sq = 1.0;  // augmented coordinate
        for (float v : x) {
            if (!std::isfinite(v)) throw std::invalid_argument("train_svm: non-finite feature");
            sq += static_cast<double>(v) * v;
        }
        qdiag[i] = sq;
        y[i] = labels[rows[i]] ? 1.0 : -1.0;
    }

    std::vector<double> w(dim + 1, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const double c_upper = config.c;

    if (objective_trace) objective_trace->clear();

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double max_pg = 0.0;
        for (std::size_t oi = 0; oi < n; ++oi) {
            std::size_t i = order[oi];
            const auto& x = samples[rows[i]];
            double wx = w[dim];
            for (int d = 0; d < dim; ++d) wx += w[d] * x[d];
            double grad = y[i] * wx - 1.0;
            double pg = grad;
            if (alpha[i] <= 0.0)
                pg = std::min(grad, 0.0);
            else if (alpha[i] >= c_upper)
                pg = std::max(grad, 0.0);
            if (std::abs(pg) > max_pg) max_pg = std::abs(pg);
            if (pg == 0.0) continue;
            double old = alpha[i];
            double next = std::clamp(old - grad / qdiag[i], 0.0, c_upper);
            if (next == old) continue;
            double delta = (next - old) * y[i];
            for (int d = 0; d < dim; ++d) w[d] += delta * x[d];
            w[dim] += delta;
            alpha[i] = next;
        }
        if (objective_trace) {
            double norm_sq = 0.0;
            for (double v : w) norm_sq += v * v;
            double alpha_sum = 0.0;
            for (double a : alpha) alpha_sum += a;
            objective_trace->push_back(0.5 * norm_sq - alpha_sum);
        }
        if (max_pg < config.tolerance) break;
    }

    LinearExpert expert;
    expert.weights.resize(dim);
    for (int d = 0; d < dim; ++d) expert.weights[d] = static_cast<float>(w[d]);
    expert.bias = static_cast<float>(w[dim]);
    return expert;
}

double svm_score(const LinearExpert& expert, const float* x, int dim) {
    if (dim != expert.dim()) throw std::invalid_argument("svm_score: dimension mismatch");
    double s = expert.bias;
    for (int d = 0; d < dim; ++d) s += static_cast<double>(expert.weights[d]) * x[d];
    return s;
}

double svm_score(const LinearExpert& expert, const std::vector<float>& x) {
    return svm_score(expert, x.data(), static_cast<int>(x.size()));
}

double svm_objective(const LinearExpert& expert,
                     const std::vector<std::vector<float>>& samples,
                     const std::vector<std::uint8_t>& labels, double c) {
    double norm_sq = 0.0;
    for (float v : expert.weights) norm_sq += static_cast<double>(v) * v;
    double hinge = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double yi = labels[i] ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - yi * svm_score(expert, samples[i]));
    }
    return 0.5 * norm_sq + c * hinge;
}

}  // namespace roadseg
