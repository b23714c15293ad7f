#include "dcits/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcits/error.hpp"

namespace dcits {

namespace {

struct KindInfo {
    DatasetKind kind;
    std::string_view name;
    std::size_t default_series;
    bool forced;
    std::size_t max_lag;
};

constexpr KindInfo kKinds[] = {
    {DatasetKind::Dataset1, "dataset1", 5, false, 0}, {DatasetKind::Dataset2, "dataset2", 5, false, 7},
    {DatasetKind::Dataset3, "dataset3", 5, false, 9}, {DatasetKind::Dataset4, "dataset4", 2, true, 9},
    {DatasetKind::Dataset5, "dataset5", 5, true, 9},  {DatasetKind::Dataset6, "dataset6", 5, true, 9},
    {DatasetKind::Dataset7, "dataset7", 5, true, 5},  {DatasetKind::Dataset8, "dataset8", 4, true, 5},
    {DatasetKind::Var2, "var2", 3, false, 2},         {DatasetKind::Cubic, "cubic", 3, true, 5},
};

const KindInfo& info(DatasetKind kind) {
    for (const KindInfo& k : kKinds) {
        if (k.kind == kind) return k;
    }
    throw ConfigError("unknown dataset kind");
}

constexpr double kDivergenceBound = 10.0;
constexpr int kCubicAttempts = 100;

void add_term(GroundTruth& gt, std::size_t target, std::size_t source, std::size_t lag, double coef,
              int order = 1, Regime regime = Regime::Any) {
    gt.terms.push_back({target, source, lag, order, coef, regime});
}

GroundTruth build_truth(const GeneratorSpec& spec) {
    GroundTruth gt;
    const std::size_t n = spec.series;
    gt.bias.assign(n, 0.0);
    switch (spec.kind) {
        case DatasetKind::Dataset1: {
            Rng rng(derive_seed(spec.seed, "params"));
            for (double& b : gt.bias) b = rng.normal();
            break;
        }
        case DatasetKind::Dataset2:
            for (std::size_t s = 0; s < n; ++s) {
                add_term(gt, s, s, 3, 0.5);
                add_term(gt, s, s, 7, 0.5);
            }
            break;
        case DatasetKind::Dataset3:
            gt.tanh_activation = true;
            for (std::size_t s = 0; s < n; ++s) {
                add_term(gt, s, s, 3, 5.0 / 7.0);
                add_term(gt, s, s, 7, 1.0 / 7.0);
                add_term(gt, s, s, 9, 1.0 / 7.0);
            }
            break;
        case DatasetKind::Dataset4:
            for (auto [target, source] : {std::pair<std::size_t, std::size_t>{0, 1}, {1, 0}}) {
                add_term(gt, target, source, 2, 2.0 / 5.0);
                add_term(gt, target, source, 5, 1.0 / 5.0);
                add_term(gt, target, source, 9, 2.0 / 5.0);
            }
            break;
        case DatasetKind::Dataset5:
        case DatasetKind::Dataset6:
            gt.tanh_activation = spec.kind == DatasetKind::Dataset6;
            add_term(gt, 0, 0, 3, 1.0 / 2.0);
            add_term(gt, 0, 0, 4, 1.0 / 2.0);
            add_term(gt, 1, 0, 9, 1.0);
            add_term(gt, 2, 0, 2, 1.0 / 2.0);
            add_term(gt, 2, 0, 7, 1.0 / 2.0);
            add_term(gt, 3, 0, 3, 1.0 / 10.0);
            add_term(gt, 3, 0, 4, 1.0 / 10.0);
            add_term(gt, 3, 0, 8, 4.0 / 5.0);
            add_term(gt, 4, 0, 2, 1.0 / 3.0);
            add_term(gt, 4, 0, 5, 2.0 / 9.0);
            add_term(gt, 4, 0, 8, 4.0 / 9.0);
            break;
        case DatasetKind::Dataset7:
            add_term(gt, 0, 0, 1, 1.0 / 4.0);
            add_term(gt, 0, 0, 5, 3.0 / 4.0);
            gt.bias[1] = 1.0;
            add_term(gt, 1, 0, 2, -1.0);
            add_term(gt, 2, 1, 1, 1.0);
            add_term(gt, 2, 3, 4, 1.0);
            gt.bias[3] = 1.0;
            add_term(gt, 3, 2, 4, -2.0 / 7.0);
            add_term(gt, 3, 4, 1, -5.0 / 7.0);
            add_term(gt, 4, 4, 4, 12.0 / 22.0);
            add_term(gt, 4, 1, 1, 10.0 / 22.0);
            break;
        case DatasetKind::Dataset8:
            gt.level_series = 0;
            add_term(gt, 1, 0, 5, 4.0 / 5.0, 1, Regime::High);
            add_term(gt, 1, 3, 2, 2.0 / 3.0, 1, Regime::Low);
            add_term(gt, 2, 0, 4, 2.0 / 3.0, 1, Regime::High);
            add_term(gt, 2, 3, 4, 4.0 / 5.0, 1, Regime::Low);
            add_term(gt, 3, 3, 1, 1.0 / 2.0);
            add_term(gt, 3, 3, 4, 2.0 / 5.0);
            break;
        case DatasetKind::Var2:
            for (std::size_t t = 0; t < n; ++t) {
                for (std::size_t s = 0; s < n; ++s) {
                    if (spec.var2.a1[t * n + s] != 0.0) add_term(gt, t, s, 1, spec.var2.a1[t * n + s]);
                    if (spec.var2.a2[t * n + s] != 0.0) add_term(gt, t, s, 2, spec.var2.a2[t * n + s]);
                }
            }
            break;
        case DatasetKind::Cubic: {
            const double a = spec.cubic.a;
            add_term(gt, 0, 0, 3, 1.0 - a, 1);
            add_term(gt, 0, 0, 3, a, 3);
            add_term(gt, 1, 1, 5, 1.0 - a, 1);
            add_term(gt, 1, 1, 5, a, 3);
            add_term(gt, 2, 2, 3, 0.5);
            add_term(gt, 2, 2, 5, 0.5);
            break;
        }
    }
    return gt;
}

bool regime_active(Regime term, int regime) {
    return term == Regime::Any || (term == Regime::High) == (regime == 1);
}

// Deterministic part of X[n,t] given the full buffer (row stride `stride`).
double recurrence(const GroundTruth& gt, const std::vector<double>& buf, std::size_t stride, std::size_t n,
                  std::size_t t, int regime, double level) {
    if (gt.level_series && *gt.level_series == n) {
        return level;
    }
    double acc = 0.0;
    for (const GroundTruthTerm& term : gt.terms) {
        if (term.target != n || !regime_active(term.regime, regime)) continue;
        double x = buf[term.source * stride + t - term.lag];
        double xp = 1.0;
        for (int k = 0; k < term.order; ++k) xp *= x;
        acc += term.coefficient * xp;
    }
    if (gt.tanh_activation) acc = std::tanh(acc);
    return acc + gt.bias[n];
}

// Level process for dataset 8: holds a level for a truncated-normal number of
// steps, then switches.
std::vector<double> level_process(const GeneratorSpec& spec, std::size_t total) {
    const Dataset8Spec& d = spec.dataset8;
    Rng rng(derive_seed(spec.seed, "persistence"));
    auto draw = [&] {
        const double p = std::round(rng.normal(d.persistence_mean, d.persistence_std));
        return std::max(static_cast<double>(d.persistence_min), p);
    };
    std::vector<double> level(total);
    bool high = rng.uniform() < 0.5;
    std::size_t last_switch = 0;
    double persistence = draw();
    for (std::size_t t = 0; t < total; ++t) {
        if (t > 0 && static_cast<double>(t - last_switch) >= persistence) {
            high = !high;
            last_switch = t;
            persistence = draw();
        }
        level[t] = high ? d.b_high : d.b_low;
    }
    return level;
}

SeriesMatrix run_generator(const GeneratorSpec& spec, std::uint64_t seed) {
    GeneratorSpec run_spec = spec;
    run_spec.seed = seed;
    const std::size_t n = spec.series;
    const std::size_t lag = max_lag(spec.kind);
    const std::size_t start = lag + spec.burn_in;
    const std::size_t total = start + spec.length;

    // Ground truth follows the caller's seed; regeneration attempts only
    // change the noise and initial conditions.
    GroundTruth gt = build_truth(spec);
    std::vector<double> buf(n * total, 0.0);
    std::vector<double> levels;
    std::vector<int> regimes(total, 0);
    if (gt.level_series) {
        levels = level_process(run_spec, total);
    }

    std::vector<Rng> noise;
    std::vector<Rng> init;
    for (std::size_t s = 0; s < n; ++s) {
        noise.emplace_back(derive_seed(seed, "noise/" + std::to_string(s)));
        init.emplace_back(derive_seed(seed, "init/" + std::to_string(s)));
    }
    auto noise_for = [&](std::size_t s) -> const NoiseSpec& {
        if (spec.kind == DatasetKind::Cubic && s < 2) return spec.cubic.map_noise;
        return spec.noise;
    };

    for (std::size_t t = 0; t < lag; ++t) {
        for (std::size_t s = 0; s < n; ++s) {
            if (gt.level_series && *gt.level_series == s) {
                buf[s * total + t] = levels[t] + inject_noise(noise[s], noise_for(s));
            } else if (spec.kind == DatasetKind::Cubic) {
                buf[s * total + t] = init[s].uniform(-1.0, 1.0);
            } else {
                buf[s * total + t] = init[s].normal();
            }
        }
    }
    for (std::size_t t = lag; t < total; ++t) {
        if (gt.level_series) {
            regimes[t] = buf[*gt.level_series * total + t - 5] > 0.5 ? 1 : 0;
        }
        for (std::size_t s = 0; s < n; ++s) {
            const double level = levels.empty() ? 0.0 : levels[t];
            const double x = recurrence(gt, buf, total, s, t, regimes[t], level) + inject_noise(noise[s], noise_for(s));
            if (!std::isfinite(x)) {
                throw NumericError(std::string(dataset_kind_name(spec.kind)) + ": non-finite value at step " +
                                   std::to_string(t));
            }
            buf[s * total + t] = x;
        }
    }

    SeriesMatrix out;
    out.series = n;
    out.length = spec.length;
    out.spec = spec;
    out.values.resize(n * spec.length);
    for (std::size_t s = 0; s < n; ++s) {
        std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(s * total + start), spec.length,
                    out.values.begin() + static_cast<std::ptrdiff_t>(s * spec.length));
    }
    if (gt.level_series) {
        gt.level.assign(levels.begin() + static_cast<std::ptrdiff_t>(start), levels.end());
        gt.regime.assign(regimes.begin() + static_cast<std::ptrdiff_t>(start), regimes.end());
    }
    out.truth = std::move(gt);
    return out;
}

}  // namespace

std::string_view dataset_kind_name(DatasetKind kind) { return info(kind).name; }

std::optional<DatasetKind> parse_dataset_kind(std::string_view name) {
    for (const KindInfo& k : kKinds) {
        if (k.name == name) return k.kind;
    }
    return std::nullopt;
}

std::size_t max_lag(DatasetKind kind) { return info(kind).max_lag; }

std::string_view regime_name(Regime regime) {
    switch (regime) {
        case Regime::Any: return "any";
        case Regime::Low: return "low";
        case Regime::High: return "high";
    }
    return "any";
}

double inject_noise(Rng& rng, const NoiseSpec& spec) {
    const double p = rng.uniform();
    if (p < spec.frequency) {
        return rng.normal(0.0, std::sqrt(spec.variance));
    }
    return 0.0;
}

Var2Spec Var2Spec::defaults() {
    Var2Spec v;
    v.a1 = {0.40, 0.10, 0.05,  //
            0.10, 0.40, 0.10,  //
            0.05, 0.02, 0.40};
    v.a2 = {0.20, 0.05, 0.02,  //
            0.05, 0.20, 0.05,  //
            0.02, 0.05, 0.20};
    return v;
}

GeneratorSpec GeneratorSpec::defaults(DatasetKind kind) {
    GeneratorSpec spec;
    spec.kind = kind;
    spec.series = info(kind).default_series;
    if (kind == DatasetKind::Var2) {
        // Dense Gaussian shocks every step.
        spec.noise = {1.0, 0.2};
    }
    return spec;
}

GeneratorSpec GeneratorSpec::normalized() const {
    GeneratorSpec spec = *this;
    const KindInfo& k = info(kind);
    if (kind == DatasetKind::Var2) {
        const std::size_t entries = spec.var2.a1.size();
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(entries))));
        if (side == 0 || side * side != entries || spec.var2.a2.size() != entries) {
            throw ConfigError("var2: A1 and A2 must be square matrices of equal size");
        }
        if (spec.series != 0 && spec.series != side) {
            throw ConfigError("var2: series count " + std::to_string(spec.series) + " does not match " +
                              std::to_string(side) + "x" + std::to_string(side) + " matrices");
        }
        spec.series = side;
    } else if (spec.series == 0) {
        spec.series = k.default_series;
    } else if (k.forced && spec.series != k.default_series) {
        throw ConfigError(std::string(k.name) + " requires N=" + std::to_string(k.default_series) + ", got " +
                          std::to_string(spec.series));
    }
    if (spec.length <= k.max_lag) {
        throw ConfigError(std::string(k.name) + ": length M=" + std::to_string(spec.length) +
                          " must exceed the maximum lag " + std::to_string(k.max_lag));
    }
    auto check_noise = [](const NoiseSpec& n, const char* what) {
        if (!(n.frequency >= 0.0 && n.frequency <= 1.0)) {
            throw ConfigError(std::string(what) + ": noise frequency must lie in [0,1]");
        }
        if (!(n.variance >= 0.0) || !std::isfinite(n.variance)) {
            throw ConfigError(std::string(what) + ": noise variance must be non-negative");
        }
    };
    check_noise(spec.noise, "generator");
    check_noise(spec.cubic.map_noise, "cubic");
    const Dataset8Spec& d = spec.dataset8;
    if (kind == DatasetKind::Dataset8 && (d.persistence_min == 0 || !(d.persistence_std >= 0.0))) {
        throw ConfigError("dataset8: persistence minimum must be positive and its std non-negative");
    }
    return spec;
}

double GroundTruth::coefficient(std::size_t target, std::size_t source, std::size_t lag, int order,
                                Regime regime) const {
    double total = 0.0;
    for (const GroundTruthTerm& t : terms) {
        if (t.target == target && t.source == source && t.lag == lag && t.order == order &&
            (t.regime == Regime::Any || regime == Regime::Any || t.regime == regime)) {
            total += t.coefficient;
        }
    }
    return total;
}

SeriesMatrix generate(const GeneratorSpec& raw) {
    const GeneratorSpec spec = raw.normalized();
    if (spec.kind == DatasetKind::Cubic) {
        return generate_cubic(spec);
    }
    return run_generator(spec, spec.seed);
}

SeriesMatrix generate_dataset8(const GeneratorSpec& raw) {
    if (raw.kind != DatasetKind::Dataset8) {
        throw ConfigError("generate_dataset8: spec kind is " + std::string(dataset_kind_name(raw.kind)));
    }
    return generate(raw);
}

SeriesMatrix generate_cubic(const GeneratorSpec& raw) {
    if (raw.kind != DatasetKind::Cubic) {
        throw ConfigError("generate_cubic: spec kind is " + std::string(dataset_kind_name(raw.kind)));
    }
    const GeneratorSpec spec = raw.normalized();
    for (int attempt = 0; attempt < kCubicAttempts; ++attempt) {
        const std::uint64_t seed = attempt == 0 ? spec.seed : derive_seed(spec.seed, static_cast<std::uint64_t>(attempt));
        try {
            SeriesMatrix out = run_generator(spec, seed);
            const bool bounded = std::all_of(out.values.begin(), out.values.end(),
                                             [](double v) { return std::abs(v) <= kDivergenceBound; });
            if (bounded) {
                return out;
            }
        } catch (const NumericError&) {
            // Overflowed to inf; try the next substream.
        }
    }
    throw NumericError("cubic: trajectory diverged in all " + std::to_string(kCubicAttempts) + " attempts");
}

double noiseless_value(const SeriesMatrix& series, std::size_t n, std::size_t t) {
    const GroundTruth& gt = series.truth;
    if (gt.level_series && *gt.level_series == n) {
        return gt.level.at(t);
    }
    const int regime = gt.regime.empty() ? 0 : gt.regime.at(t);
    return recurrence(gt, series.values, series.length, n, t, regime, 0.0);
}

}  // namespace dcits
