#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcits/interpret.hpp"
#include "dcits/training.hpp"

namespace dcits {

inline constexpr const char* kSummarySchema = "dcits.summary/1";

struct SummaryRun {
    std::size_t run = 0;  // one-based
    std::uint64_t seed = 0;
    double test_loss = 0.0;
    double test_mse = 0.0;
    double test_mae = 0.0;
    std::size_t epochs = 0;
    std::size_t best_epoch = 0;  // one-based
};

struct SummaryCoefficient {
    int order = 1;
    std::size_t n = 0;  // one-based
    std::size_t i = 0;
    std::size_t lag = 0;  // 0 for the bias order
    double mean = 0.0;
    double std = 0.0;
};

struct SummaryWindowRow {
    std::size_t window = 0;
    double mean = 0.0;
    double std = 0.0;
    double normalized = 0.0;
    std::string error;
};

// Result document written by the train and window-search commands.
struct Summary {
    std::string command;
    std::uint64_t seed = 0;
    std::string dataset;
    std::size_t series = 0;
    std::optional<std::size_t> window;
    std::vector<int> orders;
    std::string loss;
    std::vector<SummaryRun> runs;
    std::vector<std::string> failures;
    std::optional<double> stability_ratio;
    std::vector<SummaryCoefficient> masked_support;
    std::vector<std::vector<double>> lag_matrices;  // A_l row-major, l = 1..L
    std::vector<double> bias;
    std::vector<SummaryWindowRow> window_search;
    std::optional<std::size_t> best_window;
};

nlohmann::json summary_to_json(const Summary& s);
// Throws IoError on a schema mismatch or any unknown field.
Summary summary_from_json(const nlohmann::json& j);

void write_summary(const Summary& s, const std::filesystem::path& path);
Summary read_summary(const std::filesystem::path& path);

// Fills runs, failures, stability ratio, masked support, lag matrices and bias.
void fill_training_summary(Summary& s, const RepeatedResult& result);

}  // namespace dcits
