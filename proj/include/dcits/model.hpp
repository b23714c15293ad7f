#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcits/tensor.hpp"

namespace dcits {

// The seven convolutional front-end kernels, in concatenation order.
enum class KernelLabel {
    Global,                 // N x L
    Time,                   // 1 x L
    Series,                 // N x 1
    FirstNeighbour,         // N x 3
    SecondNeighbour,        // N x 5
    SingleFirstNeighbour,   // 1 x 3
    SingleSecondNeighbour,  // 1 x 5
};

std::string_view kernel_label_name(KernelLabel label);
std::optional<KernelLabel> parse_kernel_label(std::string_view name);
std::vector<KernelLabel> all_kernel_labels();

struct KernelSpec {
    std::size_t height = 1;
    std::size_t width = 1;
    KernelLabel label = KernelLabel::Global;
};

// Geometry of `label` for an N x L window.
KernelSpec kernel_spec(KernelLabel label, std::size_t series, std::size_t window);

enum class StageHead { Focuser, Modeler };

struct ModelConfig {
    std::size_t series = 0;  // N
    std::size_t window = 0;  // L
    std::vector<int> orders{1};
    std::vector<KernelLabel> kernels = all_kernel_labels();
    std::size_t hidden_layers = 3;
    std::size_t hidden_width = 0;  // 0 selects N*N*L
    double temperature = 1.0;
    std::uint64_t seed = 0;

    // Throws ConfigError. Orders must be distinct, within 0..3, and contain 1.
    void validate() const;
    std::size_t effective_hidden_width() const;
    bool has_order(int p) const;
};

// Lag extent of the transition tensor for order p (1 for the bias order).
std::size_t order_lags(const ModelConfig& config, int order);

// Parameters of one Focuser or Modeler stack.
struct StageParams {
    std::size_t in_channels = 1;  // 1 for focusers, N for modelers
    std::size_t series = 0;
    std::size_t window = 0;
    std::size_t out_lags = 0;
    std::vector<KernelSpec> kernels;
    std::vector<Tensor> conv_weights;  // [C,h,w]
    std::vector<Tensor> conv_biases;   // [1]
    std::vector<Tensor> hidden_weights;
    std::vector<Tensor> hidden_biases;
    Tensor out_weights;
    Tensor out_bias;

    // Fixed order: conv (w,b) pairs, hidden (W,b) pairs, final (W,b).
    std::vector<Tensor> parameters() const;
    std::size_t concat_width() const;
};

struct OrderStages {
    int order = 1;
    StageParams focuser;
    StageParams modeler;
};

class DcitsModel {
public:
    explicit DcitsModel(ModelConfig config);

    const ModelConfig& config() const noexcept { return config_; }
    const std::vector<OrderStages>& stages() const noexcept { return stages_; }
    std::vector<OrderStages>& stages() noexcept { return stages_; }
    const OrderStages& stages_for(int order) const;

    // All trainable tensors; order is stable and matches checkpoints.
    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;

    // Deep copy with independent parameter storage.
    DcitsModel clone() const;
    void copy_parameters_from(const DcitsModel& other);

private:
    ModelConfig config_;
    std::vector<OrderStages> stages_;
};

// Conv front end, H_N tanh layers, final affine map reshaped to [N,N,lags].
// Focuser head applies sigmoid_t, the modeler head is left linear.
//   input  [N,L] | [B,N,L] (one channel) or [N,N,L] | [B,N,N,L] (N channels)
//   output [N,N,lags] | [B,N,N,lags]
Tensor stage_forward(const StageParams& params, const Tensor& input, StageHead head, double temperature);

// p >= 1: elementwise p-th power of the window; p == 0: all-ones surrogate.
Tensor order_input(const Tensor& q, int order);

struct OrderOutput {
    int order = 1;
    Tensor input;   // order_input(q, p)
    Tensor focus;   // F_p
    Tensor coeffs;  // C_p
    Tensor alpha;   // C_p o F_p (diagonal-masked for p = 0)
};

struct ForwardResult {
    Tensor prediction;  // [N] | [B,N]
    std::vector<OrderOutput> orders;

    const OrderOutput& order(int p) const;
};

ForwardResult forward(const DcitsModel& model, const Tensor& q);

// Per-target bias b_n from the order-0 stage. Throws UnsupportedOrderError
// when the model has no bias order.
std::vector<double> bias_of(const DcitsModel& model, const Tensor& q);

// Rebuilds the prediction from a forward result's alpha tensors using the
// transition-sum definition with explicit index loops. Returns B*N values
// (row-major) for batched input, N otherwise.
std::vector<double> prediction_from_decomposition(const ForwardResult& result, const Tensor& q);

}  // namespace dcits
