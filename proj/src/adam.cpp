#include "dcits/adam.hpp"

#include <cmath>
#include <string>

#include "dcits/error.hpp"

namespace dcits {

AdamState::AdamState(std::span<const Tensor> params, AdamOptions options) : options_(options) {
    if (!(options.learning_rate > 0) || !(options.epsilon > 0) || !(options.beta1 >= 0 && options.beta1 < 1) ||
        !(options.beta2 >= 0 && options.beta2 < 1)) {
        throw ConfigError("AdamState: invalid hyperparameters");
    }
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor& p : params) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void AdamState::step(std::span<Tensor> params) {
    if (params.size() != m_.size()) {
        throw ShapeError("adam_step", "parameter list",
                         std::to_string(params.size()) + " tensors vs state for " + std::to_string(m_.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].numel() != m_[k].size()) {
            throw ShapeError("adam_step", "parameter " + std::to_string(k),
                             shape_string(params[k].shape()) + " vs moment size " + std::to_string(m_[k].size()));
        }
    }
    ++steps_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    const double lr = options_.learning_rate;
    const double eps = options_.epsilon;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!params[k].has_grad()) {
            // Zero gradient: moments decay, the update direction stays m/sqrt(v).
            auto& m = m_[k];
            auto& v = v_[k];
            auto w = params[k].mutable_values();
            for (std::size_t i = 0; i < m.size(); ++i) {
                m[i] *= b1;
                v[i] *= b2;
                w[i] -= lr * (m[i] / correction1) / (std::sqrt(v[i] / correction2) + eps);
            }
            continue;
        }
        const auto g = params[k].grad();
        auto w = params[k].mutable_values();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            w[i] -= lr * (m[i] / correction1) / (std::sqrt(v[i] / correction2) + eps);
        }
    }
}

}  // namespace dcits
