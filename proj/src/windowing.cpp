#include "dcits/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "dcits/error.hpp"
#include "dcits/rng.hpp"

namespace dcits {

std::vector<WindowSample> build_windows(const SeriesMatrix& series, std::size_t window) {
    if (window == 0) {
        throw ConfigError("window length must be positive");
    }
    if (window >= series.length) {
        throw ConfigError("window length " + std::to_string(window) + " must be below series length " +
                          std::to_string(series.length));
    }
    const std::size_t n_series = series.series;
    std::vector<WindowSample> out;
    out.reserve(series.length - window);
    for (std::size_t t = window - 1; t + 1 < series.length; ++t) {
        WindowSample s;
        s.t = t;
        s.q.resize(n_series * window);
        s.target.resize(n_series);
        for (std::size_t n = 0; n < n_series; ++n) {
            for (std::size_t j = 0; j < window; ++j) {
                s.q[n * window + j] = series.at(n, t + 1 - window + j);
            }
            s.target[n] = series.at(n, t + 1);
        }
        out.push_back(std::move(s));
    }
    return out;
}

SplitSet split(const std::vector<WindowSample>& samples, std::size_t window, SplitRatios ratios) {
    const double sum = ratios.train + ratios.validation + ratios.test;
    if (!(ratios.train > 0 && ratios.validation > 0 && ratios.test > 0) || std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be positive and sum to 1");
    }
    const std::size_t total = samples.size();
    const auto train_block = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(total)));
    const auto val_block = static_cast<std::size_t>(std::floor(ratios.validation * static_cast<double>(total)));
    if (train_block <= window || val_block <= window || train_block + val_block >= total) {
        throw ConfigError("split of " + std::to_string(total) + " samples with window " + std::to_string(window) +
                          " leaves an empty set");
    }
    SplitSet out;
    out.series = samples.front().target.size();
    out.window = window;
    out.ratios = ratios;
    out.gap = window;
    out.train.assign(samples.begin(), samples.begin() + static_cast<long>(train_block - window));
    out.validation.assign(samples.begin() + static_cast<long>(train_block),
                          samples.begin() + static_cast<long>(train_block + val_block - window));
    out.test.assign(samples.begin() + static_cast<long>(train_block + val_block), samples.end());
    return out;
}

SplitSet shuffle_train(SplitSet s, std::uint64_t seed) {
    Rng rng(seed);
    rng.shuffle(std::span<WindowSample>(s.train));
    return s;
}

std::array<std::size_t, 2> sample_time_range(const WindowSample& sample, std::size_t window) {
    return {sample.t + 1 - window, sample.t + 1};
}

std::size_t count_shared_time_indices(const SplitSet& s) {
    auto touched = [&](const std::vector<WindowSample>& set) {
        std::set<std::size_t> out;
        for (const WindowSample& w : set) {
            const auto [lo, hi] = sample_time_range(w, s.window);
            for (std::size_t u = lo; u <= hi; ++u) out.insert(u);
        }
        return out;
    };
    const std::set<std::size_t> a = touched(s.train);
    const std::set<std::size_t> b = touched(s.validation);
    const std::set<std::size_t> c = touched(s.test);
    std::size_t shared = 0;
    std::set<std::size_t> all;
    all.insert(a.begin(), a.end());
    all.insert(b.begin(), b.end());
    all.insert(c.begin(), c.end());
    for (std::size_t u : all) {
        const int hits = static_cast<int>(a.count(u)) + static_cast<int>(b.count(u)) + static_cast<int>(c.count(u));
        if (hits > 1) ++shared;
    }
    return shared;
}

Standardizer fit_standardizer(const SplitSet& s) {
    if (s.train.empty()) {
        throw ConfigError("cannot standardize on an empty training set");
    }
    // Reassemble the raw train span from the (possibly shuffled) windows.
    const WindowSample* first = &s.train.front();
    const WindowSample* last = &s.train.front();
    for (const WindowSample& w : s.train) {
        if (w.t < first->t) first = &w;
        if (w.t > last->t) last = &w;
    }
    const std::size_t lo = first->t + 1 - s.window;
    const std::size_t hi = last->t + 1;
    std::vector<std::vector<double>> raw(s.series, std::vector<double>(hi - lo + 1));
    for (const WindowSample& w : s.train) {
        for (std::size_t n = 0; n < s.series; ++n) {
            for (std::size_t j = 0; j < s.window; ++j) {
                raw[n][w.t + 1 - s.window + j - lo] = w.q[n * s.window + j];
            }
            raw[n][w.t + 1 - lo] = w.target[n];
        }
    }
    Standardizer st;
    for (std::size_t n = 0; n < s.series; ++n) {
        const std::vector<double>& r = raw[n];
        const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
        double ss = 0.0;
        for (double x : r) ss += (x - mean) * (x - mean);
        double sd = r.size() > 1 ? std::sqrt(ss / static_cast<double>(r.size() - 1)) : 0.0;
        if (!(sd > 0.0)) sd = 1.0;
        st.mean.push_back(mean);
        st.stddev.push_back(sd);
    }
    return st;
}

void apply_standardizer(SplitSet& s, const Standardizer& st) {
    for (auto* set : {&s.train, &s.validation, &s.test}) {
        for (WindowSample& w : *set) {
            for (std::size_t n = 0; n < s.series; ++n) {
                for (std::size_t j = 0; j < s.window; ++j) {
                    double& v = w.q[n * s.window + j];
                    v = st.apply(n, v);
                }
                w.target[n] = st.apply(n, w.target[n]);
            }
        }
    }
}

Batch make_batch(const std::vector<WindowSample>& samples, std::span<const std::size_t> indices, std::size_t series,
                 std::size_t window) {
    const std::size_t b = indices.size();
    std::vector<double> q(b * series * window);
    std::vector<double> y(b * series);
    for (std::size_t k = 0; k < b; ++k) {
        const WindowSample& s = samples[indices[k]];
        std::copy(s.q.begin(), s.q.end(), q.begin() + static_cast<long>(k * series * window));
        std::copy(s.target.begin(), s.target.end(), y.begin() + static_cast<long>(k * series));
    }
    return {Tensor::from({b, series, window}, std::move(q)), Tensor::from({b, series}, std::move(y))};
}

Batch make_batch(const std::vector<WindowSample>& samples, std::size_t begin, std::size_t end, std::size_t series,
                 std::size_t window) {
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    return make_batch(samples, idx, series, window);
}

}  // namespace dcits
