#pragma once

// Minimal dense float64 tensors with reverse-mode differentiation.
//
// A Tensor is a shared handle onto a graph node. Ops record their parents and
// a backward closure whenever any input requires a gradient and recording is
// enabled on the calling thread (see NoGradGuard). Graphs are confined to one
// thread; independent graphs may run concurrently.
//
// Every op accepts an optional leading batch axis so that a whole mini-batch
// is a single graph. The per-op comments give the accepted ranks.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace dcits {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// 64-byte aligned storage. Vectorized kernels split loops at alignment
// boundaries, so a fixed alignment keeps floating-point results independent
// of where the allocator happens to place a buffer.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

struct Node {
    Shape shape;
    Buffer value;
    Buffer grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    Buffer& grad_buffer();
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;
    std::size_t dim(std::size_t axis) const;

    std::span<const double> values() const;
    // Direct write access; only meaningful on leaves (parameters, inputs).
    std::span<double> mutable_values();
    // Gradient buffer; empty span when no gradient has reached this tensor.
    std::span<const double> grad() const;
    bool has_grad() const;
    bool requires_grad() const;

    void zero_grad();
    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    // Reverse-mode accumulation from this one-element tensor into every
    // reachable tensor that requires a gradient.
    void backward() const;

    // Deep copy of values as a new leaf.
    Tensor clone(bool requires_grad) const;
    Tensor detach() const { return clone(false); }

    // Internal: used by op implementations.
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

// Disables graph recording on the current thread for the guard's lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_recording_enabled();

// Valid-padding, stride-1 cross-correlation with one output channel.
//   input  [H,W] | [C,H,W] | [B,C,H,W]
//   weight [C,h,w], bias [1]
//   output [H-h+1, W-w+1] (unbatched) | [B, H-h+1, W-w+1]
Tensor conv_valid(const Tensor& input, const Tensor& weight, const Tensor& bias);

// input [D] | [B,D], weights [Dout,D], bias [Dout].
Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias);

Tensor tanh_activate(const Tensor& input);

// Logistic 1/(1+exp(-x/T)). Throws ConfigError for T <= 0.
Tensor sigmoid_t(const Tensor& input, double temperature);

// result[..,n,i,j] = alpha[..,n,i,j] * window[..,i,j]
//   alpha [N,N,L] | [B,N,N,L], window [N,L] | [B,N,L]
Tensor diamond(const Tensor& alpha_like, const Tensor& window);

Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& input, double factor);
Tensor abs_value(const Tensor& input);
Tensor square(const Tensor& input);
// Elementwise integer power; pow_int(x, 0) is all ones.
Tensor pow_int(const Tensor& input, int exponent);

// Reduces the listed axes (removed from the shape). Empty set is identity.
Tensor sum_over(const Tensor& input, std::vector<std::size_t> axes);
Tensor sum_all(const Tensor& input);
Tensor mean_all(const Tensor& input);

Tensor reshape(const Tensor& input, Shape shape);

// Concatenates tensors after flattening everything but the first
// `batch_axes` axes (0 or 1). Leading batch sizes must agree.
Tensor concat_flat(const std::vector<Tensor>& parts, std::size_t batch_axes);

// Repeats a trailing axis of size 1 `count` times.
Tensor expand_last(const Tensor& input, std::size_t count);

}  // namespace dcits
