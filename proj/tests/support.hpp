#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dcits/tensor.hpp"

namespace dcits::test {

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (double& v : out) v = dist(gen);
    return out;
}

inline Tensor random_tensor(Shape shape, std::uint64_t seed, bool requires_grad = true) {
    const std::size_t n = shape_numel(shape);
    return Tensor::from(std::move(shape), random_values(n, seed), requires_grad);
}

// Scalar loss from leaf tensors. Must rebuild the graph on every call.
using LossFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCheck {
    double worst = 0.0;
    std::string where;
};

// Central differences against reverse mode. Relative error uses a floor of
// 1e-2 in the denominator so that near-zero entries are compared absolutely.
inline GradCheck check_gradients(const LossFn& f, std::vector<Tensor> leaves, double step = 1e-6) {
    for (Tensor& t : leaves) t.zero_grad();
    f(leaves).backward();
    GradCheck out;
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        if (!leaves[k].requires_grad()) continue;
        std::vector<double> analytic(leaves[k].numel(), 0.0);
        if (leaves[k].has_grad()) {
            auto g = leaves[k].grad();
            std::copy(g.begin(), g.end(), analytic.begin());
        }
        auto values = leaves[k].mutable_values();
        for (std::size_t e = 0; e < values.size(); ++e) {
            const double saved = values[e];
            double plus = 0.0;
            double minus = 0.0;
            {
                NoGradGuard guard;
                values[e] = saved + step;
                plus = f(leaves).item();
                values[e] = saved - step;
                minus = f(leaves).item();
            }
            values[e] = saved;
            const double numeric = (plus - minus) / (2.0 * step);
            const double denom = std::max({std::abs(numeric), std::abs(analytic[e]), 1e-2});
            const double rel = std::abs(numeric - analytic[e]) / denom;
            if (rel > out.worst) {
                out.worst = rel;
                out.where = "leaf " + std::to_string(k) + " entry " + std::to_string(e);
            }
        }
    }
    return out;
}

// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("dcits_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace dcits::test
