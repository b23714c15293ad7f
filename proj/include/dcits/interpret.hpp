#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcits/datagen.hpp"
#include "dcits/training.hpp"

namespace dcits {

struct BetaMatrices {
    std::size_t series = 0;
    std::vector<double> beta_tilde;  // N x N, sum over lags of |alpha|
    std::vector<double> beta;        // N x N, rows of beta_tilde normalized to 1
    std::vector<bool> degenerate;    // per row: beta_tilde row was all zero
};

// alpha is an order-1 tensor, N x N x lags row-major.
BetaMatrices beta_from_alpha(std::span<const double> alpha, std::size_t series, std::size_t lags);

struct WindowSearchConfig {
    std::size_t l_min = 3;
    std::size_t l_max = 12;
    std::size_t l_step = 1;

    // Throws ConfigError: l_min >= 2, l_min <= l_max, l_step >= 1.
    void validate() const;
    std::vector<std::size_t> windows() const;
};

struct WindowSearchRow {
    std::size_t window = 0;
    double mean = 0.0;        // mean test loss over successful runs
    double std = 0.0;         // sample std over runs
    double normalized = 0.0;  // mean divided by the largest mean in the table
    std::size_t runs = 0;
    std::string error;        // non-empty when every run at this L failed
};

struct WindowSearchResult {
    std::vector<WindowSearchRow> rows;
    std::size_t best_window = 0;  // argmin of mean over rows without error
};

// Trains cfg.repeats models per window length and tabulates the test loss.
// A failing L is recorded in its row and does not stop the search.
WindowSearchResult window_search_loss(const SeriesMatrix& series, const ModelConfig& model_template,
                                      const TrainConfig& cfg, const WindowSearchConfig& search,
                                      SplitRatios ratios = {}, std::size_t jobs = 1);

// Largest lag carrying a significant coefficient in any order >= 1, or 0.
// When `target` is given only alpha[target, :, :] is inspected.
std::size_t largest_significant_lag(const CoefficientStats& stats, std::optional<std::size_t> target = std::nullopt);

inline constexpr std::size_t kHistogramBins = 64;

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
};

// Fixed-width histogram over the observed range of `values`.
Histogram make_histogram(std::span<const double> values, std::size_t bins = kHistogramBins);

struct RegimeStats {
    std::size_t samples = 0;  // pooled over runs
    double mean = 0.0;        // mean over runs of the per-run regime mean
    double std = 0.0;         // sample std of the per-run regime means
    double pooled_std = 0.0;  // std over all pooled samples
    Histogram histogram;
};

struct ConditionalAlpha {
    std::optional<RegimeStats> when_true;  // empty partitions are flagged by nullopt
    std::optional<RegimeStats> when_false;
};

using WindowPredicate = std::function<bool(const WindowSample&)>;

// Partitions each run's test samples by `predicate` and summarizes
// alpha^(order)[n, i, lag] in both partitions. `test` must be the test split
// the runs were evaluated on (matched by anchor time).
ConditionalAlpha conditional_alpha(const std::vector<const RunResult*>& runs, const std::vector<WindowSample>& test,
                                   const WindowPredicate& predicate, int order, std::size_t n, std::size_t i,
                                   std::size_t lag);

// X[series, target_time - lag] > threshold, read from the window. 1 <= lag <= L.
WindowPredicate lag_threshold_predicate(std::size_t series, std::size_t lag, std::size_t window, double threshold);

// Mean coefficient for (n, i, lag) of an order, from aggregated statistics.
double mean_coefficient(const CoefficientStats& stats, int order, std::size_t n, std::size_t i, std::size_t lag);
bool significant_coefficient(const CoefficientStats& stats, int order, std::size_t n, std::size_t i, std::size_t lag);

// Mean order-0 bias per target.
std::vector<double> mean_bias(const CoefficientStats& stats);

// Per-lag N x N matrices A_l[n][i] = mean alpha^(1)[n, i, l], l = 1..L.
std::vector<std::vector<double>> lag_matrices(const CoefficientStats& stats);

// Writes beta.csv, beta_tilde.csv, alpha slices alpha_p{p}_n{n}.csv (rows:
// source series, columns: lag 1..L) and an index.json describing them.
void write_heatmaps(const CoefficientStats& stats, const std::filesystem::path& dir);

}  // namespace dcits
