#pragma once

#include <cstddef>
#include <optional>

#include "dcits/config.hpp"

namespace dcits {

// Data and results of one fixed-window training experiment.
struct ExperimentOutcome {
    SeriesMatrix series;
    SplitSet split;
    std::optional<Standardizer> standardizer;
    RepeatedResult result;
};

// Generates (or loads) the series named by a normalized config.
SeriesMatrix experiment_series(const ExperimentConfig& cfg);

// Windows, splits and trains cfg.train.repeats models at window `window`
// (defaults to cfg.window).
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1,
                                 std::optional<std::size_t> window = std::nullopt);

}  // namespace dcits
