#include "dcits/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "dcits/error.hpp"

namespace dcits {

namespace {

thread_local bool g_record_grad = true;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

using NodePtr = std::shared_ptr<detail::Node>;

NodePtr make_node(Shape shape) {
    auto node = std::make_shared<detail::Node>();
    node->value.assign(shape_numel(shape), 0.0);
    node->shape = std::move(shape);
    return node;
}

// Creates the output node of an op; wires parents only when a gradient can
// flow back through it.
NodePtr make_result(Shape shape, std::initializer_list<const Tensor*> inputs) {
    auto node = make_node(std::move(shape));
    if (!g_record_grad) {
        return node;
    }
    bool needs = false;
    for (const Tensor* t : inputs) {
        needs = needs || t->requires_grad();
    }
    if (needs) {
        node->requires_grad = true;
        for (const Tensor* t : inputs) {
            node->parents.push_back(t->node());
        }
    }
    return node;
}

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) {
        throw ShapeError(op, "input", "undefined tensor");
    }
}

bool wants_grad(const NodePtr& node) { return node->requires_grad; }

}  // namespace

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? "," : "") << shape[i];
    }
    out << ']';
    return out.str();
}

detail::Buffer& detail::Node::grad_buffer() {
    if (grad.empty()) {
        grad.assign(value.size(), 0.0);
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    auto node = make_node(std::move(shape));
    std::fill(node->value.begin(), node->value.end(), value);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("Tensor::from", "values",
                         "shape " + shape_string(shape) + " needs " + std::to_string(shape_numel(shape)) +
                             " values, got " + std::to_string(values.size()));
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value.assign(values.begin(), values.end());
    node->requires_grad = requires_grad;
    return Tensor(node);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
    require_defined(*this, "Tensor::shape");
    return node_->shape;
}

std::size_t Tensor::numel() const { return node_ ? node_->value.size() : 0; }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw ShapeError("Tensor::dim", "axis " + std::to_string(axis), "rank " + std::to_string(rank()));
    }
    return node_->shape[axis];
}

std::span<const double> Tensor::values() const {
    require_defined(*this, "Tensor::values");
    return node_->value;
}

std::span<double> Tensor::mutable_values() {
    require_defined(*this, "Tensor::mutable_values");
    return node_->value;
}

std::span<const double> Tensor::grad() const {
    require_defined(*this, "Tensor::grad");
    return node_->grad;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::zero_grad() {
    if (node_ && !node_->grad.empty()) {
        std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }
}

double Tensor::item() const {
    if (numel() != 1) {
        throw ShapeError("Tensor::item", "numel", "expected 1 element, got " + std::to_string(numel()));
    }
    return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    const Shape& s = shape();
    if (index.size() != s.size()) {
        throw ShapeError("Tensor::at", "rank", "index rank " + std::to_string(index.size()) + " vs " +
                                                   std::to_string(s.size()));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= s[axis]) {
            throw ShapeError("Tensor::at", "axis " + std::to_string(axis), "index out of range");
        }
        flat = flat * s[axis] + i;
        ++axis;
    }
    return node_->value[flat];
}

Tensor Tensor::clone(bool requires_grad) const {
    return from(shape(), std::vector<double>(node_->value.begin(), node_->value.end()), requires_grad);
}

void Tensor::backward() const {
    require_defined(*this, "backward");
    if (numel() != 1) {
        throw ShapeError("backward", "loss", "expected a 1-element loss, got shape " + shape_string(shape()));
    }
    if (!node_->requires_grad) {
        return;
    }
    // Iterative post-order DFS gives a topological order.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    node_->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* node = *it;
        if (node->backward && !node->grad.empty()) {
            node->backward(*node);
        }
    }
}

NoGradGuard::NoGradGuard() : previous_(g_record_grad) { g_record_grad = false; }
NoGradGuard::~NoGradGuard() { g_record_grad = previous_; }

bool grad_recording_enabled() { return g_record_grad; }

// ---------------------------------------------------------------------------
// conv_valid

Tensor conv_valid(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    require_defined(input, "conv_valid");
    require_defined(weight, "conv_valid");
    require_defined(bias, "conv_valid");
    const Shape& is = input.shape();
    const Shape& ws = weight.shape();
    if (ws.size() != 3) {
        throw ShapeError("conv_valid", "weight rank", "expected [C,h,w], got " + shape_string(ws));
    }
    if (bias.numel() != 1) {
        throw ShapeError("conv_valid", "bias", "expected one scalar bias, got " + shape_string(bias.shape()));
    }
    std::size_t batch = 1;
    std::size_t channels = 1;
    bool batched = false;
    if (is.size() == 2) {
    } else if (is.size() == 3) {
        channels = is[0];
    } else if (is.size() == 4) {
        batch = is[0];
        channels = is[1];
        batched = true;
    } else {
        throw ShapeError("conv_valid", "input rank", "expected rank 2-4, got " + shape_string(is));
    }
    const std::size_t height = is[is.size() - 2];
    const std::size_t width = is[is.size() - 1];
    const std::size_t kc = ws[0];
    const std::size_t kh = ws[1];
    const std::size_t kw = ws[2];
    if (kc != channels) {
        throw ShapeError("conv_valid", "channels",
                         "kernel has " + std::to_string(kc) + ", input has " + std::to_string(channels));
    }
    if (kh == 0 || kh > height) {
        throw ShapeError("conv_valid", "height",
                         "kernel " + std::to_string(kh) + " vs input " + std::to_string(height));
    }
    if (kw == 0 || kw > width) {
        throw ShapeError("conv_valid", "width",
                         "kernel " + std::to_string(kw) + " vs input " + std::to_string(width));
    }
    const std::size_t oh = height - kh + 1;
    const std::size_t ow = width - kw + 1;
    Shape out_shape = batched ? Shape{batch, oh, ow} : Shape{oh, ow};
    auto out = make_result(out_shape, {&input, &weight, &bias});

    const double* x = input.values().data();
    const double* k = weight.values().data();
    const double b = bias.values()[0];
    double* y = out->value.data();
    const std::size_t plane = height * width;
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xb = x + n * channels * plane;
        double* yb = y + n * oh * ow;
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t c = 0; c < ow; ++c) {
                double acc = b;
                for (std::size_t ch = 0; ch < channels; ++ch) {
                    const double* xc = xb + ch * plane;
                    const double* kk = k + ch * kh * kw;
                    for (std::size_t i = 0; i < kh; ++i) {
                        const double* xrow = xc + (r + i) * width + c;
                        const double* krow = kk + i * kw;
                        for (std::size_t j = 0; j < kw; ++j) {
                            acc += xrow[j] * krow[j];
                        }
                    }
                }
                yb[r * ow + c] = acc;
            }
        }
    }

    if (out->requires_grad) {
        out->backward = [=](detail::Node& self) {
            const NodePtr& in = self.parents[0];
            const NodePtr& wt = self.parents[1];
            const NodePtr& bs = self.parents[2];
            const double* gy = self.grad.data();
            const double* xv = in->value.data();
            const double* kv = wt->value.data();
            double* gx = wants_grad(in) ? in->grad_buffer().data() : nullptr;
            double* gk = wants_grad(wt) ? wt->grad_buffer().data() : nullptr;
            double gb = 0.0;
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t r = 0; r < oh; ++r) {
                    for (std::size_t c = 0; c < ow; ++c) {
                        const double g = gy[(n * oh + r) * ow + c];
                        gb += g;
                        for (std::size_t ch = 0; ch < channels; ++ch) {
                            const std::size_t xoff = (n * channels + ch) * plane;
                            const std::size_t koff = ch * kh * kw;
                            for (std::size_t i = 0; i < kh; ++i) {
                                for (std::size_t j = 0; j < kw; ++j) {
                                    const std::size_t xi = xoff + (r + i) * width + c + j;
                                    const std::size_t ki = koff + i * kw + j;
                                    if (gk) gk[ki] += g * xv[xi];
                                    if (gx) gx[xi] += g * kv[ki];
                                }
                            }
                        }
                    }
                }
            }
            if (wants_grad(bs)) {
                bs->grad_buffer()[0] += gb;
            }
        };
    }
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// linear

Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_defined(input, "linear");
    require_defined(weights, "linear");
    require_defined(bias, "linear");
    const Shape& is = input.shape();
    const Shape& ws = weights.shape();
    if (ws.size() != 2) {
        throw ShapeError("linear", "weight rank", "expected [Dout,D], got " + shape_string(ws));
    }
    const std::size_t out_dim = ws[0];
    const std::size_t in_dim = ws[1];
    if (is.empty() || is.size() > 2) {
        throw ShapeError("linear", "input rank", "expected [D] or [B,D], got " + shape_string(is));
    }
    if (is.back() != in_dim) {
        throw ShapeError("linear", "inner dimension",
                         "input " + std::to_string(is.back()) + " vs weights " + std::to_string(in_dim));
    }
    if (bias.rank() != 1 || bias.dim(0) != out_dim) {
        throw ShapeError("linear", "bias", "expected [" + std::to_string(out_dim) + "], got " +
                                              shape_string(bias.shape()));
    }
    const bool batched = is.size() == 2;
    const std::size_t batch = batched ? is[0] : 1;
    Shape out_shape = batched ? Shape{batch, out_dim} : Shape{out_dim};
    auto out = make_result(out_shape, {&input, &weights, &bias});

    ConstMatrixMap x(input.values().data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in_dim));
    ConstMatrixMap w(weights.values().data(), static_cast<Eigen::Index>(out_dim),
                     static_cast<Eigen::Index>(in_dim));
    Eigen::Map<const Eigen::RowVectorXd> b(bias.values().data(), static_cast<Eigen::Index>(out_dim));
    MatrixMap y(out->value.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out_dim));
    y.noalias() = x * w.transpose();
    y.rowwise() += b;

    if (out->requires_grad) {
        out->backward = [=](detail::Node& self) {
            const NodePtr& in = self.parents[0];
            const NodePtr& wt = self.parents[1];
            const NodePtr& bs = self.parents[2];
            const auto rows = static_cast<Eigen::Index>(batch);
            const auto cols_out = static_cast<Eigen::Index>(out_dim);
            const auto cols_in = static_cast<Eigen::Index>(in_dim);
            ConstMatrixMap gy(self.grad.data(), rows, cols_out);
            if (wants_grad(in)) {
                MatrixMap gx(in->grad_buffer().data(), rows, cols_in);
                ConstMatrixMap wv(wt->value.data(), cols_out, cols_in);
                gx.noalias() += gy * wv;
            }
            if (wants_grad(wt)) {
                MatrixMap gw(wt->grad_buffer().data(), cols_out, cols_in);
                ConstMatrixMap xv(in->value.data(), rows, cols_in);
                gw.noalias() += gy.transpose() * xv;
            }
            if (wants_grad(bs)) {
                Eigen::Map<Eigen::RowVectorXd> gb(bs->grad_buffer().data(), cols_out);
                gb += gy.colwise().sum();
            }
        };
    }
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// elementwise

namespace {

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& input, const char* op, Forward f, Derivative df) {
    require_defined(input, op);
    auto out = make_result(input.shape(), {&input});
    const auto x = input.values();
    for (std::size_t i = 0; i < x.size(); ++i) {
        out->value[i] = f(x[i]);
    }
    if (out->requires_grad) {
        // df receives (x, y) so activations can reuse their output.
        out->backward = [df](detail::Node& self) {
            const NodePtr& in = self.parents[0];
            auto& gx = in->grad_buffer();
            for (std::size_t i = 0; i < gx.size(); ++i) {
                gx[i] += self.grad[i] * df(in->value[i], self.value[i]);
            }
        };
    }
    return Tensor(out);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    require_defined(a, op);
    require_defined(b, op);
    if (a.shape() != b.shape()) {
        throw ShapeError(op, "all axes", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
}

}  // namespace

Tensor tanh_activate(const Tensor& input) {
    return unary(
        input, "tanh_activate", [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid_t(const Tensor& input, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ConfigError("sigmoid_t: temperature must be positive and finite, got " + std::to_string(temperature));
    }
    const double inv_t = 1.0 / temperature;
    return unary(
        input, "sigmoid_t",
        [inv_t](double x) {
            const double z = x * inv_t;
            // Split on sign so exp never overflows.
            if (z >= 0) {
                return 1.0 / (1.0 + std::exp(-z));
            }
            const double e = std::exp(z);
            return e / (1.0 + e);
        },
        [inv_t](double, double y) { return inv_t * y * (1.0 - y); });
}

Tensor abs_value(const Tensor& input) {
    return unary(
        input, "abs_value", [](double x) { return std::abs(x); },
        [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& input) {
    return unary(
        input, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor scale(const Tensor& input, double factor) {
    return unary(
        input, "scale", [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor pow_int(const Tensor& input, int exponent) {
    if (exponent < 0) {
        throw ConfigError("pow_int: negative exponent " + std::to_string(exponent));
    }
    auto ipow = [](double x, int e) {
        double r = 1.0;
        for (int i = 0; i < e; ++i) r *= x;
        return r;
    };
    return unary(
        input, "pow_int", [=](double x) { return ipow(x, exponent); },
        [=](double x, double) { return exponent == 0 ? 0.0 : exponent * ipow(x, exponent - 1); });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    auto out = make_result(a.shape(), {&a, &b});
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        out->value[i] = av[i] * bv[i];
    }
    if (out->requires_grad) {
        out->backward = [](detail::Node& self) {
            const NodePtr& pa = self.parents[0];
            const NodePtr& pb = self.parents[1];
            if (wants_grad(pa)) {
                auto& g = pa->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
            }
            if (wants_grad(pb)) {
                auto& g = pb->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
            }
        };
    }
    return Tensor(out);
}

namespace {

Tensor add_scaled(const Tensor& a, const Tensor& b, double sign, const char* op) {
    require_same_shape(a, b, op);
    auto out = make_result(a.shape(), {&a, &b});
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        out->value[i] = av[i] + sign * bv[i];
    }
    if (out->requires_grad) {
        out->backward = [sign](detail::Node& self) {
            const NodePtr& pa = self.parents[0];
            const NodePtr& pb = self.parents[1];
            if (wants_grad(pa)) {
                auto& g = pa->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
            }
            if (wants_grad(pb)) {
                auto& g = pb->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
            }
        };
    }
    return Tensor(out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_scaled(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_scaled(a, b, -1.0, "sub"); }

// ---------------------------------------------------------------------------
// diamond

Tensor diamond(const Tensor& alpha_like, const Tensor& window) {
    require_defined(alpha_like, "diamond");
    require_defined(window, "diamond");
    const Shape& as = alpha_like.shape();
    const Shape& ws = window.shape();
    if (ws.size() < 2 || as.size() != ws.size() + 1) {
        throw ShapeError("diamond", "rank", shape_string(as) + " vs " + shape_string(ws));
    }
    const std::size_t lead = ws.size() - 2;
    for (std::size_t i = 0; i < lead; ++i) {
        if (as[i] != ws[i]) {
            throw ShapeError("diamond", "batch", shape_string(as) + " vs " + shape_string(ws));
        }
    }
    if (as[lead + 1] != ws[lead]) {
        throw ShapeError("diamond", "series", shape_string(as) + " vs " + shape_string(ws));
    }
    if (as[lead + 2] != ws[lead + 1]) {
        throw ShapeError("diamond", "lag", shape_string(as) + " vs " + shape_string(ws));
    }
    const std::size_t targets = as[lead];
    const std::size_t plane = ws[lead] * ws[lead + 1];
    const std::size_t batch = shape_numel(Shape(ws.begin(), ws.begin() + static_cast<std::ptrdiff_t>(lead)));

    auto out = make_result(as, {&alpha_like, &window});
    const double* a = alpha_like.values().data();
    const double* w = window.values().data();
    double* y = out->value.data();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t n = 0; n < targets; ++n) {
            const std::size_t off = (b * targets + n) * plane;
            for (std::size_t k = 0; k < plane; ++k) {
                y[off + k] = a[off + k] * w[b * plane + k];
            }
        }
    }
    if (out->requires_grad) {
        out->backward = [=](detail::Node& self) {
            const NodePtr& pa = self.parents[0];
            const NodePtr& pw = self.parents[1];
            double* ga = wants_grad(pa) ? pa->grad_buffer().data() : nullptr;
            double* gw = wants_grad(pw) ? pw->grad_buffer().data() : nullptr;
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t n = 0; n < targets; ++n) {
                    const std::size_t off = (b * targets + n) * plane;
                    for (std::size_t k = 0; k < plane; ++k) {
                        const double g = self.grad[off + k];
                        if (ga) ga[off + k] += g * pw->value[b * plane + k];
                        if (gw) gw[b * plane + k] += g * pa->value[off + k];
                    }
                }
            }
        };
    }
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// reductions and layout

Tensor sum_over(const Tensor& input, std::vector<std::size_t> axes) {
    require_defined(input, "sum_over");
    const Shape& is = input.shape();
    std::sort(axes.begin(), axes.end());
    axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
    for (std::size_t a : axes) {
        if (a >= is.size()) {
            throw ShapeError("sum_over", "axis " + std::to_string(a), "input rank " + std::to_string(is.size()));
        }
    }
    std::vector<bool> reduced(is.size(), false);
    for (std::size_t a : axes) reduced[a] = true;
    Shape out_shape;
    for (std::size_t i = 0; i < is.size(); ++i) {
        if (!reduced[i]) out_shape.push_back(is[i]);
    }
    // Output stride for every input axis (0 on reduced axes).
    std::vector<std::size_t> out_stride(is.size(), 0);
    {
        std::size_t s = 1;
        for (std::size_t i = is.size(); i-- > 0;) {
            if (!reduced[i]) {
                out_stride[i] = s;
                s *= is[i];
            }
        }
    }
    const std::size_t total = input.numel();
    std::vector<std::size_t> map(total);
    {
        std::vector<std::size_t> idx(is.size(), 0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t o = 0;
            for (std::size_t i = 0; i < is.size(); ++i) o += idx[i] * out_stride[i];
            map[flat] = o;
            for (std::size_t i = is.size(); i-- > 0;) {
                if (++idx[i] < is[i]) break;
                idx[i] = 0;
            }
        }
    }
    auto out = make_result(out_shape, {&input});
    const auto x = input.values();
    for (std::size_t flat = 0; flat < total; ++flat) {
        out->value[map[flat]] += x[flat];
    }
    if (out->requires_grad) {
        out->backward = [map = std::move(map)](detail::Node& self) {
            auto& g = self.parents[0]->grad_buffer();
            for (std::size_t flat = 0; flat < g.size(); ++flat) g[flat] += self.grad[map[flat]];
        };
    }
    return Tensor(out);
}

Tensor sum_all(const Tensor& input) {
    require_defined(input, "sum_all");
    std::vector<std::size_t> axes(input.rank());
    std::iota(axes.begin(), axes.end(), std::size_t{0});
    return sum_over(input, axes);
}

Tensor mean_all(const Tensor& input) {
    require_defined(input, "mean_all");
    if (input.numel() == 0) {
        throw ShapeError("mean_all", "numel", "empty tensor");
    }
    return scale(sum_all(input), 1.0 / static_cast<double>(input.numel()));
}

Tensor reshape(const Tensor& input, Shape shape) {
    require_defined(input, "reshape");
    if (shape_numel(shape) != input.numel()) {
        throw ShapeError("reshape", "numel", shape_string(input.shape()) + " -> " + shape_string(shape));
    }
    auto out = make_result(std::move(shape), {&input});
    std::copy(input.values().begin(), input.values().end(), out->value.begin());
    if (out->requires_grad) {
        out->backward = [](detail::Node& self) {
            auto& g = self.parents[0]->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        };
    }
    return Tensor(out);
}

Tensor concat_flat(const std::vector<Tensor>& parts, std::size_t batch_axes) {
    if (parts.empty()) {
        throw ShapeError("concat_flat", "parts", "nothing to concatenate");
    }
    if (batch_axes > 1) {
        throw ShapeError("concat_flat", "batch axes", "only 0 or 1 leading batch axes supported");
    }
    const std::size_t batch = batch_axes ? parts.front().dim(0) : 1;
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    bool needs = false;
    for (const Tensor& t : parts) {
        require_defined(t, "concat_flat");
        if (batch_axes && (t.rank() == 0 || t.dim(0) != batch)) {
            throw ShapeError("concat_flat", "batch", "leading sizes differ: " + shape_string(t.shape()));
        }
        widths.push_back(t.numel() / batch);
        total += widths.back();
        needs = needs || t.requires_grad();
    }
    Shape out_shape = batch_axes ? Shape{batch, total} : Shape{total};
    auto out = make_node(out_shape);
    if (g_record_grad && needs) {
        out->requires_grad = true;
        for (const Tensor& t : parts) out->parents.push_back(t.node());
    }
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const auto v = parts[p].values();
        for (std::size_t b = 0; b < batch; ++b) {
            std::copy_n(v.data() + b * widths[p], widths[p], out->value.data() + b * total + offset);
        }
        offset += widths[p];
    }
    if (out->requires_grad) {
        out->backward = [widths, batch, total](detail::Node& self) {
            std::size_t off = 0;
            for (std::size_t p = 0; p < self.parents.size(); ++p) {
                const NodePtr& parent = self.parents[p];
                if (wants_grad(parent)) {
                    auto& g = parent->grad_buffer();
                    for (std::size_t b = 0; b < batch; ++b) {
                        for (std::size_t k = 0; k < widths[p]; ++k) {
                            g[b * widths[p] + k] += self.grad[b * total + off + k];
                        }
                    }
                }
                off += widths[p];
            }
        };
    }
    return Tensor(out);
}

Tensor expand_last(const Tensor& input, std::size_t count) {
    require_defined(input, "expand_last");
    const Shape& is = input.shape();
    if (is.empty() || is.back() != 1) {
        throw ShapeError("expand_last", "last axis", "expected size 1, got " + shape_string(is));
    }
    Shape out_shape = is;
    out_shape.back() = count;
    auto out = make_result(out_shape, {&input});
    const auto x = input.values();
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::fill_n(out->value.data() + i * count, count, x[i]);
    }
    if (out->requires_grad) {
        out->backward = [count](detail::Node& self) {
            auto& g = self.parents[0]->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                double acc = 0.0;
                for (std::size_t k = 0; k < count; ++k) acc += self.grad[i * count + k];
                g[i] += acc;
            }
        };
    }
    return Tensor(out);
}

}  // namespace dcits
