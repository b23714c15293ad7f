#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcits {

// Tensor shapes do not line up. `axis` names the offending dimension.
class ShapeError : public std::invalid_argument {
public:
    ShapeError(const std::string& op, const std::string& axis, const std::string& detail)
        : std::invalid_argument(op + ": shape mismatch on " + axis + " (" + detail + ")"),
          op_(op), axis_(axis) {}

    const std::string& op() const noexcept { return op_; }
    const std::string& axis() const noexcept { return axis_; }

private:
    std::string op_;
    std::string axis_;
};

// Invalid user-facing configuration (bad spec, bad flag, impossible split).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure: divergence, NaN loss, undefined ratio.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, long epoch = -1)
        : std::runtime_error(what), epoch_(epoch) {}

    // Epoch at which training diverged, or -1 when not tied to training.
    long epoch() const noexcept { return epoch_; }

private:
    long epoch_;
};

// Requested an order that the model was not built with.
class UnsupportedOrderError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dcits
