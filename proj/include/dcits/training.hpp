#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcits/model.hpp"
#include "dcits/windowing.hpp"

namespace dcits {

enum class LossKind { Mse, Mae };

std::string_view loss_kind_name(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);

struct TrainConfig {
    LossKind loss = LossKind::Mae;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    std::size_t repeats = 5;
    std::uint64_t seed = 0;

    // Throws ConfigError: patience in [1, max_epochs), repeats >= 1, lr > 0.
    void validate() const;
};

// Mean over batch and series of the squared or absolute error.
Tensor loss_value(const Tensor& prediction, const Tensor& target, LossKind kind);
double loss_value(std::span<const double> prediction, std::span<const double> target, LossKind kind);

// Per-sample interpretability tensors for one order over the test split.
struct OrderTrace {
    int order = 1;
    std::size_t lags = 0;
    std::vector<double> alpha;   // samples x N x N x lags
    std::vector<double> focus;   // samples x N x N x lags
    std::vector<double> coeffs;  // samples x N x N x lags
};

struct RunResult {
    std::uint64_t seed = 0;
    DcitsModel model;
    std::vector<double> train_loss;  // per epoch, configured loss kind
    std::vector<double> val_loss;
    std::size_t best_epoch = 0;      // zero-based index into val_loss
    double test_loss = 0.0;          // configured loss kind
    double test_mse = 0.0;
    double test_mae = 0.0;
    std::vector<std::size_t> sample_t;    // test anchors
    std::vector<double> predictions;      // samples x N
    std::vector<OrderTrace> traces;

    const OrderTrace& trace(int order) const;
    std::size_t sample_count() const { return sample_t.size(); }
    // Test-set mean of alpha for one order, N x N x lags.
    std::vector<double> mean_alpha(int order) const;
};

// Mini-batch Adam with per-epoch reshuffling, early stopping on validation
// loss and restoration of the best parameters, then test-set inference.
// `model_config.seed` is replaced by a seed derived from `seed`. Throws
// NumericError carrying the epoch when the loss stops being finite.
RunResult train_once(ModelConfig model_config, const SplitSet& split, const TrainConfig& cfg, std::uint64_t seed);

// Forward pass over `samples` in inference mode, filling the prediction and
// per-order traces of `result`.
void run_inference(const DcitsModel& model, const std::vector<WindowSample>& samples, RunResult& result);

struct OrderStats {
    int order = 1;
    std::size_t lags = 0;
    std::vector<double> mean;  // N x N x lags
    std::vector<double> std;   // sample std across runs, 0 for one run
    std::vector<bool> significant;
};

struct CoefficientStats {
    std::size_t series = 0;
    std::vector<OrderStats> orders;
    std::size_t runs = 0;

    const OrderStats& order(int p) const;
    std::size_t index(std::size_t n, std::size_t i, std::size_t lag_col, std::size_t lags) const {
        return (n * series + i) * lags + lag_col;
    }
};

// |mean| > 2 std and |mean| > floor.
inline constexpr double kSignificanceFloor = 0.01;
bool is_significant(double mean, double std);

// Averages per-run test means across runs.
CoefficientStats aggregate(const std::vector<const RunResult*>& runs, std::size_t series);

struct RunFailure {
    std::size_t run = 0;
    long epoch = -1;
    std::string message;
};

struct RepeatedResult {
    std::vector<RunResult> runs;  // successful runs, in run-index order
    std::vector<std::size_t> run_index;
    std::vector<RunFailure> failures;
    CoefficientStats stats;

    std::vector<double> test_mse() const;
    std::vector<double> test_losses() const;
};

// cfg.repeats independent runs on the same split, at most `jobs` at a time.
// Run r uses seed derive_seed(cfg.seed, r). Throws NumericError only when
// every run fails.
RepeatedResult run_repeated(const ModelConfig& model_config, const SplitSet& split, const TrainConfig& cfg,
                            std::size_t jobs = 1);

// Sample std (n-1) over mean. Throws ConfigError for fewer than two losses
// and NumericError when the mean is zero.
double stability_ratio(std::span<const double> losses);

// Writes checkpoint.json, loss_curve.csv and alpha_p{p}.csv into `dir`.
// Indices in the CSVs are one-based; l is the lag (1 = most recent).
void write_run_directory(const RunResult& run, const std::filesystem::path& dir);

// coefficients.csv: p,n,i,l,mean,std,significant (one-based indices).
void write_coefficient_stats(const CoefficientStats& stats, const std::filesystem::path& path);

// Lag convention helpers: lag l (1-based) sits in window column L-l.
inline std::size_t lag_to_column(std::size_t lag, std::size_t window) { return window - lag; }
inline std::size_t column_to_lag(std::size_t column, std::size_t window) { return window - column; }

}  // namespace dcits
