#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dcits/error.hpp"
#include "dcits/windowing.hpp"

using namespace dcits;

namespace {

// X[n,t] = 1000 n + t so that every value names its own position.
SeriesMatrix indexed_series(std::size_t series, std::size_t length) {
    SeriesMatrix s;
    s.series = series;
    s.length = length;
    s.values.resize(series * length);
    for (std::size_t n = 0; n < series; ++n)
        for (std::size_t t = 0; t < length; ++t) s.values[n * length + t] = 1000.0 * n + t;
    return s;
}

}  // namespace

TEST(Windows, CountIsLengthMinusWindow) {
    EXPECT_EQ(build_windows(indexed_series(2, 12), 10).size(), 2u);
    EXPECT_EQ(build_windows(indexed_series(3, 100), 7).size(), 93u);
    EXPECT_THROW(build_windows(indexed_series(2, 10), 10), ConfigError);
    EXPECT_THROW(build_windows(indexed_series(2, 10), 0), ConfigError);
}

TEST(Windows, AlignmentAndTarget) {
    const std::size_t L = 4;
    const auto w = build_windows(indexed_series(3, 20), L);
    for (const WindowSample& s : w) {
        for (std::size_t n = 0; n < 3; ++n) {
            for (std::size_t j = 0; j < L; ++j) {
                EXPECT_EQ(s.q[n * L + j], 1000.0 * n + (s.t + 1 - L + j));
            }
            // Last column is the current step, target is the next one.
            EXPECT_EQ(s.q[n * L + L - 1], 1000.0 * n + s.t);
            EXPECT_EQ(s.target[n], 1000.0 * n + s.t + 1);
        }
    }
    EXPECT_EQ(w.front().t, L - 1);
    EXPECT_EQ(w.back().t, 18u);
}

TEST(Windows, ConsecutiveWindowsStitch) {
    const std::size_t L = 5;
    const auto w = build_windows(indexed_series(2, 30), L);
    for (std::size_t k = 1; k < w.size(); ++k) {
        for (std::size_t n = 0; n < 2; ++n) {
            for (std::size_t j = 0; j + 1 < L; ++j) EXPECT_EQ(w[k].q[n * L + j], w[k - 1].q[n * L + j + 1]);
            EXPECT_EQ(w[k].q[n * L + L - 1], w[k - 1].target[n]);
        }
    }
}

TEST(Split, BlockSizesWithGaps) {
    const auto w = build_windows(indexed_series(2, 1010), 10);
    ASSERT_EQ(w.size(), 1000u);
    const SplitSet s = split(w, 10);
    EXPECT_EQ(s.train.size(), 690u);
    EXPECT_EQ(s.validation.size(), 140u);
    EXPECT_EQ(s.test.size(), 150u);
    EXPECT_EQ(s.gap, 10u);
    // Chronological: train earliest, test latest.
    EXPECT_LT(s.train.back().t, s.validation.front().t);
    EXPECT_LT(s.validation.back().t, s.test.front().t);
}

TEST(Split, NoSharedTimeIndices) {
    for (std::size_t L : {2u, 5u, 9u, 12u}) {
        const auto w = build_windows(indexed_series(1, 600), L);
        const SplitSet s = shuffle_train(split(w, L), 3);
        EXPECT_EQ(count_shared_time_indices(s), 0u) << "L=" << L;
        for (const auto* set : {&s.train, &s.validation, &s.test}) {
            for (const WindowSample& x : *set) {
                const auto [lo, hi] = sample_time_range(x, L);
                EXPECT_LE(hi, 599u);
                EXPECT_LE(lo, hi);
            }
        }
    }
}

TEST(Split, LeakageCheckerDetectsOverlap) {
    const auto w = build_windows(indexed_series(1, 200), 5);
    SplitSet s = split(w, 5);
    s.validation.insert(s.validation.begin(), s.train.back());
    EXPECT_GT(count_shared_time_indices(s), 0u);
}

TEST(Split, RejectsBadRatiosAndTinyInputs) {
    const auto w = build_windows(indexed_series(1, 200), 5);
    EXPECT_THROW(split(w, 5, {0.5, 0.3, 0.3}), ConfigError);
    EXPECT_THROW(split(w, 5, {0.7, 0.0, 0.3}), ConfigError);
    const auto small = build_windows(indexed_series(1, 40), 5);
    EXPECT_THROW(split(small, 5), ConfigError);
}

TEST(Split, ShuffleIsDeterministicPermutation) {
    const auto w = build_windows(indexed_series(1, 400), 4);
    const SplitSet base = split(w, 4);
    const SplitSet a = shuffle_train(base, 17);
    const SplitSet b = shuffle_train(base, 17);
    const SplitSet c = shuffle_train(base, 18);
    auto anchors = [](const SplitSet& s) {
        std::vector<std::size_t> t;
        for (const auto& x : s.train) t.push_back(x.t);
        return t;
    };
    EXPECT_EQ(anchors(a), anchors(b));
    EXPECT_NE(anchors(a), anchors(c));
    auto sorted = anchors(a);
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, anchors(base));
    EXPECT_EQ(anchors(a).size(), base.train.size());
}

TEST(Standardizer, FitsTrainSpanOnly) {
    const std::size_t L = 3;
    const auto w = build_windows(indexed_series(2, 300), L);
    SplitSet s = shuffle_train(split(w, L), 1);
    const Standardizer st = fit_standardizer(s);
    // Train span covers raw times 0 .. last train anchor + 1.
    std::size_t hi = 0;
    for (const auto& x : s.train) hi = std::max(hi, x.t + 1);
    for (std::size_t n = 0; n < 2; ++n) {
        std::vector<double> raw;
        for (std::size_t t = 0; t <= hi; ++t) raw.push_back(1000.0 * n + t);
        const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / raw.size();
        double ss = 0;
        for (double v : raw) ss += (v - mean) * (v - mean);
        EXPECT_NEAR(st.mean[n], mean, 1e-9);
        EXPECT_NEAR(st.stddev[n], std::sqrt(ss / (raw.size() - 1)), 1e-9);
    }
    const double before = s.test.front().target[1];
    apply_standardizer(s, st);
    EXPECT_NEAR(st.invert(1, s.test.front().target[1]), before, 1e-9);
}

TEST(Batch, StacksSamples) {
    const std::size_t L = 3;
    const auto w = build_windows(indexed_series(2, 20), L);
    const std::vector<std::size_t> idx{4, 1};
    const Batch b = make_batch(w, idx, 2, L);
    ASSERT_EQ(b.q.shape(), (Shape{2, 2, L}));
    ASSERT_EQ(b.target.shape(), (Shape{2, 2}));
    EXPECT_EQ(b.q.at({0, 1, 2}), w[4].q[1 * L + 2]);
    EXPECT_EQ(b.target.at({1, 0}), w[1].target[0]);
    const Batch r = make_batch(w, 2, 5, 2, L);
    EXPECT_EQ(r.q.dim(0), 3u);
    EXPECT_EQ(r.q.at({0, 0, 0}), w[2].q[0]);
}
