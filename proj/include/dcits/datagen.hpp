#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcits/rng.hpp"

namespace dcits {

enum class DatasetKind {
    Dataset1,
    Dataset2,
    Dataset3,
    Dataset4,
    Dataset5,
    Dataset6,
    Dataset7,
    Dataset8,
    Var2,
    Cubic,
};

std::string_view dataset_kind_name(DatasetKind kind);
std::optional<DatasetKind> parse_dataset_kind(std::string_view name);

struct NoiseSpec {
    double frequency = 0.3;  // probability that a step receives noise
    double variance = 0.1;   // variance of the Gaussian draw
};

// Sparse N(0, variance) shocks: with probability `frequency`, else 0.
double inject_noise(Rng& rng, const NoiseSpec& spec);

struct Var2Spec {
    // Row-major N x N lag-1 and lag-2 matrices.
    std::vector<double> a1;
    std::vector<double> a2;

    static Var2Spec defaults();
};

struct CubicSpec {
    double a = 3.75;
    // Noise applied to the two cubic-map series. The map escapes to infinity
    // as soon as a shock pushes |x| above 1, so it defaults to none; the
    // linear third series uses the generator noise.
    NoiseSpec map_noise{0.0, 0.0};
};

struct Dataset8Spec {
    double b_low = 0.2;
    double b_high = 0.7;
    double persistence_mean = 50.0;
    double persistence_std = 30.0;
    std::size_t persistence_min = 10;
};

struct GeneratorSpec {
    DatasetKind kind = DatasetKind::Dataset2;
    std::size_t series = 0;  // 0 selects the kind's default / forced count
    std::size_t length = 5000;
    std::size_t burn_in = 50;
    NoiseSpec noise{};
    std::uint64_t seed = 0;
    Var2Spec var2 = Var2Spec::defaults();
    CubicSpec cubic{};
    Dataset8Spec dataset8{};

    // Defaults for a kind, including its forced series count and noise.
    static GeneratorSpec defaults(DatasetKind kind);
    // Fills series count and validates. Throws ConfigError.
    GeneratorSpec normalized() const;
};

// Largest lag used by the recurrence of `kind`.
std::size_t max_lag(DatasetKind kind);

enum class Regime { Any, Low, High };
std::string_view regime_name(Regime regime);

// One generating term: coefficient * X[source, t - lag]^order feeding
// X[target, t]. Indices are zero-based, lags one-based.
struct GroundTruthTerm {
    std::size_t target = 0;
    std::size_t source = 0;
    std::size_t lag = 1;
    int order = 1;
    double coefficient = 0.0;
    Regime regime = Regime::Any;
};

struct GroundTruth {
    std::vector<GroundTruthTerm> terms;
    std::vector<double> bias;     // per-series constant term
    bool tanh_activation = false; // datasets 3 and 6 wrap the lag sum in tanh
    // Dataset 8 only: target series driven by the level process, its level
    // b_t per emitted step, and the regime (X[0,t-5] > 1/2) per emitted step.
    std::optional<std::size_t> level_series;
    std::vector<double> level;
    std::vector<int> regime;

    // Coefficient of (target, source, lag, order) in `regime`, 0 if absent.
    double coefficient(std::size_t target, std::size_t source, std::size_t lag, int order = 1,
                       Regime regime = Regime::Any) const;
};

struct SeriesMatrix {
    std::size_t series = 0;
    std::size_t length = 0;
    std::vector<double> values;  // row-major series x length
    GroundTruth truth;
    GeneratorSpec spec;

    double at(std::size_t n, std::size_t t) const { return values[n * length + t]; }
    std::span<const double> row(std::size_t n) const { return {values.data() + n * length, length}; }
};

SeriesMatrix generate(const GeneratorSpec& spec);
SeriesMatrix generate_dataset8(const GeneratorSpec& spec);
SeriesMatrix generate_cubic(const GeneratorSpec& spec);

// Recomputes X[n,t] (t >= max lag) from the recorded ground truth and the
// stored history, without noise. Used for fidelity checks.
double noiseless_value(const SeriesMatrix& series, std::size_t n, std::size_t t);

}  // namespace dcits
