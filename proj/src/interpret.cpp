#include "dcits/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "dcits/csv.hpp"
#include "dcits/error.hpp"

namespace dcits {

namespace {

double mean_of(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::size_t coefficient_index(const CoefficientStats& stats, const OrderStats& os, std::size_t n, std::size_t i,
                              std::size_t lag) {
    if (n >= stats.series || i >= stats.series) {
        throw ShapeError("coefficient", "series", "index out of range");
    }
    if (os.order == 0) return stats.index(n, i, 0, 1);
    if (lag == 0 || lag > os.lags) {
        throw ShapeError("coefficient", "lag", "lag " + std::to_string(lag) + " outside 1.." + std::to_string(os.lags));
    }
    return stats.index(n, i, lag_to_column(lag, os.lags), os.lags);
}

}  // namespace

BetaMatrices beta_from_alpha(std::span<const double> alpha, std::size_t series, std::size_t lags) {
    if (alpha.size() != series * series * lags) {
        throw ShapeError("beta_from_alpha", "alpha", "expected N*N*L values");
    }
    BetaMatrices out;
    out.series = series;
    out.beta_tilde.assign(series * series, 0.0);
    out.beta.assign(series * series, 0.0);
    out.degenerate.assign(series, false);
    for (std::size_t n = 0; n < series; ++n) {
        double row = 0.0;
        for (std::size_t i = 0; i < series; ++i) {
            double s = 0.0;
            for (std::size_t l = 0; l < lags; ++l) s += std::abs(alpha[(n * series + i) * lags + l]);
            out.beta_tilde[n * series + i] = s;
            row += s;
        }
        if (row == 0.0) {
            out.degenerate[n] = true;
            continue;
        }
        for (std::size_t i = 0; i < series; ++i) out.beta[n * series + i] = out.beta_tilde[n * series + i] / row;
    }
    return out;
}

void WindowSearchConfig::validate() const {
    if (l_min < 2) throw ConfigError("search.l_min must be at least 2");
    if (l_min > l_max) throw ConfigError("search.l_min must not exceed search.l_max");
    if (l_step == 0) throw ConfigError("search.l_step must be positive");
}

std::vector<std::size_t> WindowSearchConfig::windows() const {
    validate();
    std::vector<std::size_t> out;
    for (std::size_t l = l_min; l <= l_max; l += l_step) out.push_back(l);
    return out;
}

WindowSearchResult window_search_loss(const SeriesMatrix& series, const ModelConfig& model_template,
                                      const TrainConfig& cfg, const WindowSearchConfig& search, SplitRatios ratios,
                                      std::size_t jobs) {
    cfg.validate();
    WindowSearchResult out;
    for (std::size_t l : search.windows()) {
        WindowSearchRow row;
        row.window = l;
        try {
            const SplitSet sp = split(build_windows(series, l), l, ratios);
            ModelConfig mc = model_template;
            mc.series = series.series;
            mc.window = l;
            TrainConfig tc = cfg;
            tc.seed = derive_seed(cfg.seed, "window/" + std::to_string(l));
            const RepeatedResult rr = run_repeated(mc, sp, tc, jobs);
            const std::vector<double> losses = rr.test_losses();
            row.mean = mean_of(losses);
            row.std = sample_std(losses);
            row.runs = losses.size();
        } catch (const NumericError& e) {
            row.error = e.what();
        }
        out.rows.push_back(row);
    }
    double max_mean = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const WindowSearchRow& r : out.rows) {
        if (!r.error.empty()) continue;
        max_mean = std::max(max_mean, r.mean);
        if (r.mean < best) {
            best = r.mean;
            out.best_window = r.window;
        }
    }
    for (WindowSearchRow& r : out.rows) {
        if (r.error.empty() && max_mean > 0.0) r.normalized = r.mean / max_mean;
    }
    return out;
}

std::size_t largest_significant_lag(const CoefficientStats& stats, std::optional<std::size_t> target) {
    std::size_t best = 0;
    for (const OrderStats& os : stats.orders) {
        if (os.order == 0) continue;
        for (std::size_t n = 0; n < stats.series; ++n) {
            if (target && *target != n) continue;
            for (std::size_t i = 0; i < stats.series; ++i) {
                for (std::size_t col = 0; col < os.lags; ++col) {
                    if (os.significant[stats.index(n, i, col, os.lags)]) {
                        best = std::max(best, column_to_lag(col, os.lags));
                    }
                }
            }
        }
    }
    return best;
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
    Histogram h;
    h.counts.assign(bins, 0);
    if (values.empty()) return h;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    h.lo = *lo;
    h.hi = *hi;
    const double width = (h.hi - h.lo) / static_cast<double>(bins);
    for (double v : values) {
        std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - h.lo) / width) : 0;
        h.counts[std::min(b, bins - 1)] += 1;
    }
    return h;
}

ConditionalAlpha conditional_alpha(const std::vector<const RunResult*>& runs, const std::vector<WindowSample>& test,
                                   const WindowPredicate& predicate, int order, std::size_t n, std::size_t i,
                                   std::size_t lag) {
    std::map<std::size_t, bool> side;
    for (const WindowSample& s : test) side[s.t] = predicate(s);

    std::vector<double> pooled[2];
    std::vector<double> run_means[2];
    for (const RunResult* run : runs) {
        const OrderTrace& tr = run->trace(order);
        const std::size_t series = run->model.config().series;
        if (n >= series || i >= series) throw ShapeError("conditional_alpha", "series", "index out of range");
        std::size_t col = 0;
        if (order != 0) {
            if (lag == 0 || lag > tr.lags) throw ShapeError("conditional_alpha", "lag", "lag outside window");
            col = lag_to_column(lag, tr.lags);
        }
        const std::size_t per = series * series * tr.lags;
        std::vector<double> values[2];
        for (std::size_t s = 0; s < run->sample_count(); ++s) {
            const auto it = side.find(run->sample_t[s]);
            if (it == side.end()) throw ConfigError("run sample has no matching test window");
            values[it->second ? 0 : 1].push_back(tr.alpha[s * per + (n * series + i) * tr.lags + col]);
        }
        for (int k = 0; k < 2; ++k) {
            if (values[k].empty()) continue;
            run_means[k].push_back(mean_of(values[k]));
            pooled[k].insert(pooled[k].end(), values[k].begin(), values[k].end());
        }
    }
    ConditionalAlpha out;
    for (int k = 0; k < 2; ++k) {
        if (pooled[k].empty()) continue;
        RegimeStats rs;
        rs.samples = pooled[k].size();
        rs.mean = mean_of(run_means[k]);
        rs.std = sample_std(run_means[k]);
        rs.pooled_std = sample_std(pooled[k]);
        rs.histogram = make_histogram(pooled[k]);
        (k == 0 ? out.when_true : out.when_false) = rs;
    }
    return out;
}

WindowPredicate lag_threshold_predicate(std::size_t series, std::size_t lag, std::size_t window, double threshold) {
    if (lag == 0 || lag > window) {
        throw ConfigError("predicate lag " + std::to_string(lag) + " does not fit window " + std::to_string(window));
    }
    // Lags count back from the target, so lag 1 is the last window column.
    const std::size_t col = lag_to_column(lag, window);
    return [series, col, window, threshold](const WindowSample& s) { return s.q[series * window + col] > threshold; };
}

double mean_coefficient(const CoefficientStats& stats, int order, std::size_t n, std::size_t i, std::size_t lag) {
    const OrderStats& os = stats.order(order);
    return os.mean[coefficient_index(stats, os, n, i, lag)];
}

bool significant_coefficient(const CoefficientStats& stats, int order, std::size_t n, std::size_t i,
                             std::size_t lag) {
    const OrderStats& os = stats.order(order);
    return os.significant[coefficient_index(stats, os, n, i, lag)];
}

std::vector<double> mean_bias(const CoefficientStats& stats) {
    std::vector<double> out;
    for (std::size_t n = 0; n < stats.series; ++n) out.push_back(mean_coefficient(stats, 0, n, n, 0));
    return out;
}

std::vector<std::vector<double>> lag_matrices(const CoefficientStats& stats) {
    const OrderStats& os = stats.order(1);
    const std::size_t n = stats.series;
    std::vector<std::vector<double>> out;
    for (std::size_t lag = 1; lag <= os.lags; ++lag) {
        std::vector<double> a(n * n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) a[r * n + c] = mean_coefficient(stats, 1, r, c, lag);
        }
        out.push_back(std::move(a));
    }
    return out;
}

void write_heatmaps(const CoefficientStats& stats, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::size_t n = stats.series;
    nlohmann::json index = {{"series", n}, {"files", nlohmann::json::array()}};
    auto add = [&](const std::string& file, const std::string& what, const std::string& rows,
                   const std::string& cols) {
        index["files"].push_back({{"file", file}, {"content", what}, {"rows", rows}, {"columns", cols}});
    };
    if (stats.runs > 0) {
        const OrderStats& o1 = stats.order(1);
        const BetaMatrices b = beta_from_alpha(o1.mean, n, o1.lags);
        write_matrix_csv(dir / "beta_tilde.csv", b.beta_tilde, n, n);
        write_matrix_csv(dir / "beta.csv", b.beta, n, n);
        add("beta_tilde.csv", "sum over lags of |mean alpha|", "target series 1..N", "source series 1..N");
        add("beta.csv", "beta_tilde normalized per row", "target series 1..N", "source series 1..N");
        nlohmann::json degenerate = nlohmann::json::array();
        for (std::size_t r = 0; r < n; ++r) {
            if (b.degenerate[r]) degenerate.push_back(r + 1);
        }
        index["degenerate_rows"] = degenerate;
    }
    for (const OrderStats& os : stats.orders) {
        if (os.order == 0) {
            std::vector<double> bias(n);
            for (std::size_t r = 0; r < n; ++r) bias[r] = os.mean[stats.index(r, r, 0, 1)];
            write_matrix_csv(dir / "bias.csv", bias, n, 1);
            add("bias.csv", "mean bias per target", "target series 1..N", "bias");
            continue;
        }
        for (std::size_t target = 0; target < n; ++target) {
            std::vector<double> slice(n * os.lags);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t lag = 1; lag <= os.lags; ++lag) {
                    slice[i * os.lags + (lag - 1)] =
                        os.mean[stats.index(target, i, lag_to_column(lag, os.lags), os.lags)];
                }
            }
            const std::string file =
                "alpha_p" + std::to_string(os.order) + "_n" + std::to_string(target + 1) + ".csv";
            write_matrix_csv(dir / file, slice, n, os.lags);
            add(file, "mean alpha of order " + std::to_string(os.order) + " for target " + std::to_string(target + 1),
                "source series 1..N", "lag 1.." + std::to_string(os.lags));
        }
    }
    std::ofstream out(dir / "index.json");
    if (!out) throw IoError("cannot write heatmap index in " + dir.string());
    out << index.dump(2) << '\n';
}

}  // namespace dcits
