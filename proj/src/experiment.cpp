#include "dcits/experiment.hpp"

#include "dcits/error.hpp"
#include "dcits/series_io.hpp"

namespace dcits {

SeriesMatrix experiment_series(const ExperimentConfig& cfg) {
    if (cfg.data_path) {
        std::filesystem::path sidecar = *cfg.data_path;
        sidecar.replace_extension(".json");
        return load_series(*cfg.data_path, sidecar);
    }
    return generate(cfg.generator);
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::size_t jobs, std::optional<std::size_t> window) {
    const std::optional<std::size_t> l = window ? window : cfg.window;
    if (!l) throw ConfigError("experiment needs window.length");
    ExperimentOutcome out{experiment_series(cfg), {}, std::nullopt, {}};
    out.split = split(build_windows(out.series, *l), *l, cfg.ratios);
    if (cfg.standardize) {
        out.standardizer = fit_standardizer(out.split);
        apply_standardizer(out.split, *out.standardizer);
    }
    ModelConfig mc = cfg.model;
    mc.series = out.series.series;
    mc.window = *l;
    out.result = run_repeated(mc, out.split, cfg.train, jobs);
    return out;
}

}  // namespace dcits
