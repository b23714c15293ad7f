#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "dcits/error.hpp"
#include "dcits/interpret.hpp"
#include "support.hpp"

using namespace dcits;

namespace {

// Statistics for one order-1 tensor, with significance given per entry.
CoefficientStats stats_with(std::size_t n, std::size_t lags, const std::vector<double>& mean,
                            const std::vector<double>& std) {
    CoefficientStats s;
    s.series = n;
    s.runs = 3;
    OrderStats o;
    o.order = 1;
    o.lags = lags;
    o.mean = mean;
    o.std = std;
    for (std::size_t k = 0; k < mean.size(); ++k) o.significant.push_back(is_significant(mean[k], std[k]));
    s.orders.push_back(o);
    return s;
}

// A run whose order-1 trace holds a value chosen per test sample.
RunResult fake_run(const std::vector<WindowSample>& test, std::size_t n, std::size_t lags,
                   const std::function<double(const WindowSample&)>& value_at_entry, std::size_t entry) {
    ModelConfig mc;
    mc.series = n;
    mc.window = lags;
    RunResult r{0, DcitsModel(mc), {}, {}, 0, 0, 0, 0, {}, {}, {}};
    OrderTrace t;
    t.order = 1;
    t.lags = lags;
    const std::size_t per = n * n * lags;
    for (const WindowSample& s : test) {
        r.sample_t.push_back(s.t);
        std::vector<double> a(per, 0.0);
        a[entry] = value_at_entry(s);
        t.alpha.insert(t.alpha.end(), a.begin(), a.end());
    }
    r.traces.push_back(t);
    return r;
}

}  // namespace

TEST(Beta, SingleEntryAndDegenerateRows) {
    const std::size_t n = 3, l = 4;
    std::vector<double> alpha(n * n * l, 0.0);
    alpha[(0 * n + 2) * l + 1] = -0.7;
    const BetaMatrices b = beta_from_alpha(alpha, n, l);
    EXPECT_DOUBLE_EQ(b.beta_tilde[0 * n + 2], 0.7);
    EXPECT_DOUBLE_EQ(b.beta[0 * n + 2], 1.0);
    EXPECT_DOUBLE_EQ(b.beta[0 * n + 0], 0.0);
    EXPECT_FALSE(b.degenerate[0]);
    EXPECT_TRUE(b.degenerate[1]);
    EXPECT_TRUE(b.degenerate[2]);
    EXPECT_EQ(b.beta[1 * n + 1], 0.0);
    EXPECT_THROW(beta_from_alpha(std::vector<double>(5), n, l), ShapeError);
}

TEST(Beta, RowsSumToOneAndIgnoreLagOrder) {
    const std::size_t n = 4, l = 5;
    const auto alpha = test::random_values(n * n * l, 17);
    const BetaMatrices b = beta_from_alpha(alpha, n, l);
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            EXPECT_GE(b.beta[r * n + c], 0.0);
            sum += b.beta[r * n + c];
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    // Reversing the lag axis leaves both matrices unchanged.
    std::vector<double> reversed(alpha.size());
    for (std::size_t k = 0; k < n * n; ++k)
        for (std::size_t j = 0; j < l; ++j) reversed[k * l + j] = alpha[k * l + (l - 1 - j)];
    const BetaMatrices r = beta_from_alpha(reversed, n, l);
    for (std::size_t k = 0; k < n * n; ++k) {
        EXPECT_NEAR(r.beta[k], b.beta[k], 1e-15);
        EXPECT_NEAR(r.beta_tilde[k], b.beta_tilde[k], 1e-15);
    }
}

TEST(LargestSignificantLag, Cases) {
    const std::size_t n = 2, l = 6;
    std::vector<double> mean(n * n * l, 0.0), std(n * n * l, 0.0);
    CoefficientStats none = stats_with(n, l, mean, std);
    EXPECT_EQ(largest_significant_lag(none), 0u);

    // Lag 4 on target 0, lag 2 on target 1.
    mean[(0 * n + 1) * l + lag_to_column(4, l)] = 0.5;
    mean[(1 * n + 1) * l + lag_to_column(2, l)] = 0.3;
    // Large but noisy coefficient at lag 6 is not significant.
    mean[(1 * n + 0) * l + lag_to_column(6, l)] = 0.5;
    std[(1 * n + 0) * l + lag_to_column(6, l)] = 0.4;
    const CoefficientStats s = stats_with(n, l, mean, std);
    EXPECT_EQ(largest_significant_lag(s), 4u);
    EXPECT_EQ(largest_significant_lag(s, 0), 4u);
    EXPECT_EQ(largest_significant_lag(s, 1), 2u);
    EXPECT_DOUBLE_EQ(mean_coefficient(s, 1, 0, 1, 4), 0.5);
    EXPECT_TRUE(significant_coefficient(s, 1, 0, 1, 4));
    EXPECT_FALSE(significant_coefficient(s, 1, 1, 0, 6));
    EXPECT_THROW(mean_coefficient(s, 1, 0, 1, 7), ShapeError);
    EXPECT_THROW(mean_coefficient(s, 2, 0, 1, 1), UnsupportedOrderError);

    const auto mats = lag_matrices(s);
    ASSERT_EQ(mats.size(), l);
    EXPECT_DOUBLE_EQ(mats[3][0 * n + 1], 0.5);
    EXPECT_DOUBLE_EQ(mats[1][1 * n + 1], 0.3);
}

TEST(Histogram, CountsAndRange) {
    const std::vector<double> v{0.0, 1.0, 2.0, 3.0, 4.0};
    const Histogram h = make_histogram(v, 4);
    EXPECT_EQ(h.lo, 0.0);
    EXPECT_EQ(h.hi, 4.0);
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 1, 2}));
    const Histogram c = make_histogram(std::vector<double>(10, 0.3));
    EXPECT_EQ(c.counts.size(), kHistogramBins);
    EXPECT_EQ(c.counts[0], 10u);
    EXPECT_EQ(std::accumulate(c.counts.begin(), c.counts.end(), std::size_t{0}), 10u);
}

TEST(Predicate, ReadsLagFromWindow) {
    WindowSample s;
    const std::size_t L = 5;
    s.q.assign(2 * L, 0.0);
    // Series 1 at lag 5 (oldest column) and lag 1 (newest column).
    s.q[1 * L + 0] = 0.9;
    s.q[1 * L + 4] = 0.1;
    EXPECT_TRUE(lag_threshold_predicate(1, 5, L, 0.5)(s));
    EXPECT_FALSE(lag_threshold_predicate(1, 1, L, 0.5)(s));
    EXPECT_FALSE(lag_threshold_predicate(0, 5, L, 0.5)(s));
    EXPECT_THROW(lag_threshold_predicate(0, 6, L, 0.5), ConfigError);
    EXPECT_THROW(lag_threshold_predicate(0, 0, L, 0.5), ConfigError);
}

TEST(ConditionalAlpha, PartitionsByPredicate) {
    const std::size_t n = 2, L = 3;
    std::vector<WindowSample> test;
    for (std::size_t t = 10; t < 30; ++t) {
        WindowSample s;
        s.t = t;
        s.q.assign(n * L, 0.0);
        s.q[0 * L + 2] = t % 2 == 0 ? 1.0 : 0.0;  // series 0 at lag 1
        s.target.assign(n, 0.0);
        test.push_back(s);
    }
    const std::size_t entry = (1 * n + 0) * L + lag_to_column(2, L);
    // Run A: 0.8 when the predicate holds, 0.1 otherwise. Run B: 0.6 / 0.1.
    const RunResult a = fake_run(test, n, L, [](const WindowSample& s) { return s.q[2] > 0.5 ? 0.8 : 0.1; }, entry);
    const RunResult b = fake_run(test, n, L, [](const WindowSample& s) { return s.q[2] > 0.5 ? 0.6 : 0.1; }, entry);
    const ConditionalAlpha c =
        conditional_alpha({&a, &b}, test, lag_threshold_predicate(0, 1, L, 0.5), 1, 1, 0, 2);
    ASSERT_TRUE(c.when_true.has_value());
    ASSERT_TRUE(c.when_false.has_value());
    EXPECT_EQ(c.when_true->samples, 20u);
    EXPECT_NEAR(c.when_true->mean, 0.7, 1e-12);
    EXPECT_NEAR(c.when_true->std, std::sqrt(0.02), 1e-12);
    EXPECT_NEAR(c.when_false->mean, 0.1, 1e-12);
    EXPECT_NEAR(c.when_false->std, 0.0, 1e-12);

    // No sample satisfies the predicate: that side is flagged empty.
    const ConditionalAlpha none = conditional_alpha({&a}, test, [](const WindowSample&) { return false; }, 1, 1, 0, 2);
    EXPECT_FALSE(none.when_true.has_value());
    EXPECT_TRUE(none.when_false.has_value());
}

TEST(WindowSearch, ConfigValidation) {
    EXPECT_EQ((WindowSearchConfig{3, 7, 2}.windows()), (std::vector<std::size_t>{3, 5, 7}));
    EXPECT_THROW((WindowSearchConfig{1, 7, 1}.validate()), ConfigError);
    EXPECT_THROW((WindowSearchConfig{8, 7, 1}.validate()), ConfigError);
    EXPECT_THROW((WindowSearchConfig{3, 7, 0}.validate()), ConfigError);
}

TEST(WindowSearch, TabulatesEveryWindow) {
    GeneratorSpec spec = GeneratorSpec::defaults(DatasetKind::Dataset2);
    spec.series = 2;
    spec.length = 300;
    spec.seed = 2;
    const SeriesMatrix s = generate(spec);
    ModelConfig mc;
    mc.hidden_width = 4;
    mc.hidden_layers = 1;
    TrainConfig tc;
    tc.max_epochs = 3;
    tc.patience = 1;
    tc.repeats = 2;
    tc.seed = 4;
    const WindowSearchResult r = window_search_loss(s, mc, tc, {2, 4, 1});
    ASSERT_EQ(r.rows.size(), 3u);
    double max_mean = 0.0, best = 1e300;
    std::size_t best_l = 0;
    for (const auto& row : r.rows) {
        EXPECT_TRUE(row.error.empty());
        EXPECT_EQ(row.runs, 2u);
        max_mean = std::max(max_mean, row.mean);
        if (row.mean < best) {
            best = row.mean;
            best_l = row.window;
        }
    }
    EXPECT_EQ(r.best_window, best_l);
    for (const auto& row : r.rows) EXPECT_NEAR(row.normalized, row.mean / max_mean, 1e-15);
}

TEST(Heatmaps, WritesIndexedFiles) {
    const std::size_t n = 2, l = 3;
    CoefficientStats s = stats_with(n, l, test::random_values(n * n * l, 3), std::vector<double>(n * n * l, 0.0));
    OrderStats bias;
    bias.order = 0;
    bias.lags = 1;
    bias.mean = {0.2, 0.0, 0.0, -0.4};
    bias.std.assign(4, 0.0);
    bias.significant.assign(4, true);
    s.orders.insert(s.orders.begin(), bias);
    EXPECT_EQ(mean_bias(s), (std::vector<double>{0.2, -0.4}));
    const auto dir = test::scratch_dir("heatmaps");
    write_heatmaps(s, dir);
    for (const char* f : {"beta.csv", "beta_tilde.csv", "bias.csv", "alpha_p1_n1.csv", "alpha_p1_n2.csv",
                          "index.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    // Column 1 of a slice is lag 1, the newest window column.
    std::ifstream in(dir / "alpha_p1_n1.csv");
    std::string row;
    std::getline(in, row);
    const double first = std::stod(row.substr(0, row.find(',')));
    EXPECT_DOUBLE_EQ(first, s.order(1).mean[lag_to_column(1, l)]);
}
