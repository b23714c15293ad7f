#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcits/tensor.hpp"

namespace dcits {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment estimates for a fixed list of parameter tensors.
class AdamState {
public:
    AdamState(std::span<const Tensor> params, AdamOptions options = {});

    const AdamOptions& options() const noexcept { return options_; }
    std::uint64_t step_count() const noexcept { return steps_; }
    const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
    const std::vector<std::vector<double>>& second_moment() const noexcept { return v_; }

    // One bias-corrected Adam update using each parameter's accumulated grad.
    // Parameters without a gradient are treated as having a zero gradient.
    void step(std::span<Tensor> params);

private:
    AdamOptions options_;
    std::uint64_t steps_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

inline void adam_step(std::span<Tensor> params, AdamState& state) { state.step(params); }

}  // namespace dcits
