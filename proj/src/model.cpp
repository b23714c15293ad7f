#include "dcits/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dcits/error.hpp"
#include "dcits/rng.hpp"

namespace dcits {

namespace {

constexpr KernelLabel kAllKernels[] = {
    KernelLabel::Global,          KernelLabel::Time,
    KernelLabel::Series,          KernelLabel::FirstNeighbour,
    KernelLabel::SecondNeighbour, KernelLabel::SingleFirstNeighbour,
    KernelLabel::SingleSecondNeighbour,
};

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) {
        v = rng.uniform(-bound, bound);
    }
    return Tensor::from(std::move(shape), std::move(values), true);
}

StageParams make_stage(const ModelConfig& config, std::size_t in_channels, std::size_t out_lags,
                       std::uint64_t seed) {
    Rng rng(seed);
    StageParams stage;
    stage.in_channels = in_channels;
    stage.series = config.series;
    stage.window = config.window;
    stage.out_lags = out_lags;
    for (KernelLabel label : config.kernels) {
        const KernelSpec spec = kernel_spec(label, config.series, config.window);
        // Kernels wider than the window have no valid placement.
        if (spec.width > config.window || spec.height > config.series) {
            continue;
        }
        stage.kernels.push_back(spec);
        const double bound = std::sqrt(1.0 / static_cast<double>(in_channels * spec.height * spec.width));
        stage.conv_weights.push_back(uniform_tensor({in_channels, spec.height, spec.width}, bound, rng));
        stage.conv_biases.push_back(uniform_tensor({1}, bound, rng));
    }
    if (stage.kernels.empty()) {
        throw ConfigError("model: no kernel in the menu fits a " + std::to_string(config.series) + "x" +
                          std::to_string(config.window) + " window");
    }
    const std::size_t width = config.effective_hidden_width();
    std::size_t fan_in = stage.concat_width();
    for (std::size_t layer = 0; layer < config.hidden_layers; ++layer) {
        const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        stage.hidden_weights.push_back(uniform_tensor({width, fan_in}, bound, rng));
        stage.hidden_biases.push_back(uniform_tensor({width}, bound, rng));
        fan_in = width;
    }
    const std::size_t out_dim = config.series * config.series * out_lags;
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    stage.out_weights = uniform_tensor({out_dim, fan_in}, bound, rng);
    stage.out_bias = uniform_tensor({out_dim}, bound, rng);
    return stage;
}

StageParams clone_stage(const StageParams& src) {
    StageParams out = src;
    auto deep = [](std::vector<Tensor>& v) {
        for (Tensor& t : v) t = t.clone(true);
    };
    deep(out.conv_weights);
    deep(out.conv_biases);
    deep(out.hidden_weights);
    deep(out.hidden_biases);
    out.out_weights = src.out_weights.clone(true);
    out.out_bias = src.out_bias.clone(true);
    return out;
}

// Constant [B,N,N,1] selecting the i == n diagonal.
Tensor diagonal_mask(std::size_t batch, std::size_t series) {
    Tensor mask = Tensor::zeros({batch, series, series, 1});
    auto v = mask.mutable_values();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t n = 0; n < series; ++n) {
            v[(b * series + n) * series + n] = 1.0;
        }
    }
    return mask;
}

}  // namespace

std::string_view kernel_label_name(KernelLabel label) {
    switch (label) {
        case KernelLabel::Global: return "global";
        case KernelLabel::Time: return "time";
        case KernelLabel::Series: return "series";
        case KernelLabel::FirstNeighbour: return "first_neighbour";
        case KernelLabel::SecondNeighbour: return "second_neighbour";
        case KernelLabel::SingleFirstNeighbour: return "single_first_neighbour";
        case KernelLabel::SingleSecondNeighbour: return "single_second_neighbour";
    }
    return "unknown";
}

std::optional<KernelLabel> parse_kernel_label(std::string_view name) {
    for (KernelLabel label : kAllKernels) {
        if (kernel_label_name(label) == name) {
            return label;
        }
    }
    return std::nullopt;
}

std::vector<KernelLabel> all_kernel_labels() { return {std::begin(kAllKernels), std::end(kAllKernels)}; }

KernelSpec kernel_spec(KernelLabel label, std::size_t series, std::size_t window) {
    switch (label) {
        case KernelLabel::Global: return {series, window, label};
        case KernelLabel::Time: return {1, window, label};
        case KernelLabel::Series: return {series, 1, label};
        case KernelLabel::FirstNeighbour: return {series, 3, label};
        case KernelLabel::SecondNeighbour: return {series, 5, label};
        case KernelLabel::SingleFirstNeighbour: return {1, 3, label};
        case KernelLabel::SingleSecondNeighbour: return {1, 5, label};
    }
    throw ConfigError("unknown kernel label");
}

void ModelConfig::validate() const {
    if (series == 0) throw ConfigError("model: series count N must be positive");
    if (window == 0) throw ConfigError("model: window length L must be positive");
    if (orders.empty()) throw ConfigError("model: order set is empty");
    std::set<int> seen;
    for (int p : orders) {
        if (p < 0 || p > 3) throw ConfigError("model: order " + std::to_string(p) + " outside 0..3");
        if (!seen.insert(p).second) throw ConfigError("model: duplicate order " + std::to_string(p));
    }
    if (!seen.contains(1)) {
        throw ConfigError("model: the linear order 1 is required for forecasting");
    }
    if (kernels.empty()) throw ConfigError("model: convolution menu is empty");
    if (hidden_layers == 0) throw ConfigError("model: at least one hidden layer is required");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ConfigError("model: temperature must be positive");
    }
}

std::size_t ModelConfig::effective_hidden_width() const {
    return hidden_width ? hidden_width : series * series * window;
}

bool ModelConfig::has_order(int p) const { return std::find(orders.begin(), orders.end(), p) != orders.end(); }

std::size_t order_lags(const ModelConfig& config, int order) { return order == 0 ? 1 : config.window; }

std::vector<Tensor> StageParams::parameters() const {
    std::vector<Tensor> out;
    for (std::size_t k = 0; k < conv_weights.size(); ++k) {
        out.push_back(conv_weights[k]);
        out.push_back(conv_biases[k]);
    }
    for (std::size_t k = 0; k < hidden_weights.size(); ++k) {
        out.push_back(hidden_weights[k]);
        out.push_back(hidden_biases[k]);
    }
    out.push_back(out_weights);
    out.push_back(out_bias);
    return out;
}

std::size_t StageParams::concat_width() const {
    std::size_t total = 0;
    for (const KernelSpec& k : kernels) {
        total += (series - k.height + 1) * (window - k.width + 1);
    }
    return total;
}

DcitsModel::DcitsModel(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    std::vector<int> orders = config_.orders;
    std::sort(orders.begin(), orders.end());
    config_.orders = orders;
    for (int p : orders) {
        OrderStages s;
        s.order = p;
        const std::string tag = "order" + std::to_string(p);
        const std::size_t lags = order_lags(config_, p);
        s.focuser = make_stage(config_, 1, lags, derive_seed(config_.seed, tag + "/focuser"));
        s.modeler = make_stage(config_, config_.series, lags, derive_seed(config_.seed, tag + "/modeler"));
        stages_.push_back(std::move(s));
    }
}

const OrderStages& DcitsModel::stages_for(int order) const {
    for (const OrderStages& s : stages_) {
        if (s.order == order) return s;
    }
    throw UnsupportedOrderError("model has no order " + std::to_string(order));
}

std::vector<Tensor> DcitsModel::parameters() const {
    std::vector<Tensor> out;
    for (const OrderStages& s : stages_) {
        for (const Tensor& t : s.focuser.parameters()) out.push_back(t);
        for (const Tensor& t : s.modeler.parameters()) out.push_back(t);
    }
    return out;
}

std::size_t DcitsModel::parameter_count() const {
    std::size_t total = 0;
    for (const Tensor& t : parameters()) total += t.numel();
    return total;
}

DcitsModel DcitsModel::clone() const {
    DcitsModel copy = *this;
    for (OrderStages& s : copy.stages_) {
        s.focuser = clone_stage(s.focuser);
        s.modeler = clone_stage(s.modeler);
    }
    return copy;
}

void DcitsModel::copy_parameters_from(const DcitsModel& other) {
    auto dst = parameters();
    const auto src = other.parameters();
    if (dst.size() != src.size()) {
        throw ShapeError("copy_parameters_from", "parameter list", "models have different layouts");
    }
    for (std::size_t k = 0; k < dst.size(); ++k) {
        if (dst[k].shape() != src[k].shape()) {
            throw ShapeError("copy_parameters_from", "parameter " + std::to_string(k),
                             shape_string(dst[k].shape()) + " vs " + shape_string(src[k].shape()));
        }
        std::copy(src[k].values().begin(), src[k].values().end(), dst[k].mutable_values().begin());
    }
}

Tensor stage_forward(const StageParams& params, const Tensor& input, StageHead head, double temperature) {
    const std::size_t n = params.series;
    const std::size_t l = params.window;
    const std::size_t c = params.in_channels;
    const std::size_t spatial_rank = c == 1 ? 2 : 3;
    const Shape& is = input.shape();
    bool batched = false;
    if (is.size() == spatial_rank + 1) {
        batched = true;
    } else if (is.size() != spatial_rank) {
        throw ShapeError("stage_forward", "input rank",
                         "expected rank " + std::to_string(spatial_rank) + " or " +
                             std::to_string(spatial_rank + 1) + ", got " + shape_string(is));
    }
    const std::size_t batch = batched ? is[0] : 1;
    const Shape expected = c == 1 ? Shape{n, l} : Shape{c, n, l};
    if (!std::equal(expected.begin(), expected.end(), is.end() - static_cast<std::ptrdiff_t>(expected.size()))) {
        throw ShapeError("stage_forward", "window", "expected trailing " + shape_string(expected) + ", got " +
                                                        shape_string(is));
    }
    const Tensor x = reshape(input, {batch, c, n, l});
    std::vector<Tensor> features;
    features.reserve(params.kernels.size());
    for (std::size_t k = 0; k < params.kernels.size(); ++k) {
        features.push_back(conv_valid(x, params.conv_weights[k], params.conv_biases[k]));
    }
    Tensor h = concat_flat(features, 1);
    for (std::size_t layer = 0; layer < params.hidden_weights.size(); ++layer) {
        h = tanh_activate(linear(h, params.hidden_weights[layer], params.hidden_biases[layer]));
    }
    Tensor out = linear(h, params.out_weights, params.out_bias);
    out = batched ? reshape(out, {batch, n, n, params.out_lags}) : reshape(out, {n, n, params.out_lags});
    if (head == StageHead::Focuser) {
        out = sigmoid_t(out, temperature);
    }
    return out;
}

Tensor order_input(const Tensor& q, int order) {
    if (order < 0) {
        throw UnsupportedOrderError("order_input: negative order " + std::to_string(order));
    }
    if (order == 0) {
        return Tensor::full(q.shape(), 1.0);
    }
    if (order == 1) {
        return q;
    }
    return pow_int(q, order);
}

const OrderOutput& ForwardResult::order(int p) const {
    for (const OrderOutput& o : orders) {
        if (o.order == p) return o;
    }
    throw UnsupportedOrderError("forward result has no order " + std::to_string(p));
}

ForwardResult forward(const DcitsModel& model, const Tensor& q) {
    const ModelConfig& cfg = model.config();
    const std::size_t n = cfg.series;
    const std::size_t l = cfg.window;
    const Shape& qs = q.shape();
    const bool batched = qs.size() == 3;
    if (!(qs.size() == 2 || batched) || qs[qs.size() - 2] != n || qs[qs.size() - 1] != l) {
        throw ShapeError("forward", "window", "expected [N,L] or [B,N,L] with N=" + std::to_string(n) +
                                                  ", L=" + std::to_string(l) + ", got " + shape_string(qs));
    }
    const std::size_t batch = batched ? qs[0] : 1;
    const Tensor qb = batched ? q : reshape(q, {1, n, l});

    ForwardResult result;
    Tensor prediction;
    for (const OrderStages& stages : model.stages()) {
        OrderOutput out;
        out.order = stages.order;
        out.input = order_input(qb, stages.order);
        Tensor contribution;
        if (stages.order == 0) {
            const Tensor mask = diagonal_mask(batch, n);
            out.focus = stage_forward(stages.focuser, out.input, StageHead::Focuser, cfg.temperature);
            const Tensor gated = expand_last(hadamard(out.focus, mask), l);
            out.coeffs = stage_forward(stages.modeler, gated, StageHead::Modeler, cfg.temperature);
            out.alpha = hadamard(hadamard(out.coeffs, out.focus), mask);
            contribution = sum_over(out.alpha, {2, 3});
        } else {
            out.focus = stage_forward(stages.focuser, out.input, StageHead::Focuser, cfg.temperature);
            out.coeffs = stage_forward(stages.modeler, diamond(out.focus, out.input), StageHead::Modeler,
                                       cfg.temperature);
            out.alpha = hadamard(out.coeffs, out.focus);
            contribution = sum_over(diamond(out.alpha, out.input), {2, 3});
        }
        prediction = prediction.defined() ? add(prediction, contribution) : contribution;
        result.orders.push_back(std::move(out));
    }
    if (!batched) {
        prediction = reshape(prediction, {n});
        for (OrderOutput& o : result.orders) {
            const std::size_t lags = o.alpha.dim(3);
            o.input = reshape(o.input, {n, l});
            o.focus = reshape(o.focus, {n, n, lags});
            o.coeffs = reshape(o.coeffs, {n, n, lags});
            o.alpha = reshape(o.alpha, {n, n, lags});
        }
    }
    result.prediction = prediction;
    return result;
}

std::vector<double> bias_of(const DcitsModel& model, const Tensor& q) {
    if (!model.config().has_order(0)) {
        throw UnsupportedOrderError("bias_of: model was built without the bias order 0");
    }
    NoGradGuard guard;
    const ForwardResult r = forward(model, q);
    const Tensor& alpha = r.order(0).alpha;
    const std::size_t n = model.config().series;
    const std::size_t batch = alpha.numel() / (n * n);
    std::vector<double> bias(batch * n, 0.0);
    const auto v = alpha.values();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                bias[b * n + t] += v[(b * n + t) * n + i];
            }
        }
    }
    return bias;
}

std::vector<double> prediction_from_decomposition(const ForwardResult& result, const Tensor& q) {
    const Shape& qs = q.shape();
    const std::size_t n = qs[qs.size() - 2];
    const std::size_t l = qs[qs.size() - 1];
    const std::size_t batch = q.numel() / (n * l);
    std::vector<double> pred(batch * n, 0.0);
    const auto qv = q.values();
    for (const OrderOutput& o : result.orders) {
        const auto a = o.alpha.values();
        const std::size_t lags = o.order == 0 ? 1 : l;
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t t = 0; t < n; ++t) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < lags; ++j) {
                        const double coef = a[((b * n + t) * n + i) * lags + j];
                        if (o.order == 0) {
                            acc += i == t ? coef : 0.0;
                        } else {
                            double x = 1.0;
                            for (int k = 0; k < o.order; ++k) x *= qv[(b * n + i) * l + j];
                            acc += coef * x;
                        }
                    }
                }
                pred[b * n + t] += acc;
            }
        }
    }
    return pred;
}

}  // namespace dcits
