#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dcits/datagen.hpp"
#include "dcits/tensor.hpp"

namespace dcits {

struct WindowSample {
    std::vector<double> q;       // N x L row-major; column L-1 is X[:, t]
    std::vector<double> target;  // X[:, t+1]
    std::size_t t = 0;           // anchor time index (zero-based)
};

// One sample per anchor t = L-1 .. M-2. Throws ConfigError when L >= M or L == 0.
std::vector<WindowSample> build_windows(const SeriesMatrix& series, std::size_t window);

struct SplitRatios {
    double train = 0.7;
    double validation = 0.15;
    double test = 0.15;
};

struct SplitSet {
    std::size_t series = 0;
    std::size_t window = 0;
    std::vector<WindowSample> train;
    std::vector<WindowSample> validation;
    std::vector<WindowSample> test;
    SplitRatios ratios;
    std::size_t gap = 0;  // anchors dropped at each block boundary
};

// Chronological train/validation/test blocks. The last `window` anchors of
// the train and validation blocks are dropped so that no raw time index is
// shared between two sets. Throws ConfigError on bad ratios or an empty set.
SplitSet split(const std::vector<WindowSample>& samples, std::size_t window, SplitRatios ratios = {});

// Deterministic permutation of the training samples.
SplitSet shuffle_train(SplitSet split, std::uint64_t seed);

// Raw time indices touched (window columns and target) by a sample.
std::array<std::size_t, 2> sample_time_range(const WindowSample& sample, std::size_t window);

// Number of raw time indices touched by more than one of the three sets.
std::size_t count_shared_time_indices(const SplitSet& split);

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    double apply(std::size_t n, double x) const { return (x - mean[n]) / stddev[n]; }
    double invert(std::size_t n, double z) const { return z * stddev[n] + mean[n]; }
};

// Per-series mean/std over the raw time span covered by the training block.
Standardizer fit_standardizer(const SplitSet& split);
void apply_standardizer(SplitSet& split, const Standardizer& s);

// Stacks windows [B,N,L] and targets [B,N] for the given sample indices.
struct Batch {
    Tensor q;
    Tensor target;
};
Batch make_batch(const std::vector<WindowSample>& samples, std::span<const std::size_t> indices, std::size_t series,
                 std::size_t window);
Batch make_batch(const std::vector<WindowSample>& samples, std::size_t begin, std::size_t end, std::size_t series,
                 std::size_t window);

}  // namespace dcits
