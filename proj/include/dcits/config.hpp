#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "dcits/datagen.hpp"
#include "dcits/interpret.hpp"
#include "dcits/model.hpp"
#include "dcits/training.hpp"
#include "dcits/windowing.hpp"

namespace dcits {

// Flat `section.key=value` experiment description. Lines starting with '#'
// and blank lines are ignored. Unknown or repeated keys are errors.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    GeneratorSpec generator = GeneratorSpec::defaults(DatasetKind::Dataset2);
    std::optional<std::filesystem::path> data_path;  // read series instead of generating
    std::optional<std::size_t> window;
    std::optional<WindowSearchConfig> search;
    ModelConfig model;
    TrainConfig train;
    SplitRatios ratios;
    bool standardize = false;
    bool report_alpha = true;
    bool report_heatmaps = true;

    // Keys that were given explicitly (after parsing), for seed derivation.
    std::map<std::string, std::string> explicit_keys;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Fills every seed not set explicitly from the master seed through named
// substreams and validates the generator, model and train sections.
// `override_seed` replaces the master seed (before derivation).
ExperimentConfig normalize(ExperimentConfig cfg, std::optional<std::uint64_t> override_seed = std::nullopt);

// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);

}  // namespace dcits
