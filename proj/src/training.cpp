#include "dcits/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "dcits/adam.hpp"
#include "dcits/checkpoint.hpp"
#include "dcits/csv.hpp"
#include "dcits/error.hpp"
#include "dcits/rng.hpp"

namespace dcits {

namespace {

constexpr std::size_t kEvalBatch = 256;

double evaluate(const DcitsModel& model, const std::vector<WindowSample>& samples, std::size_t series,
                std::size_t window, LossKind kind) {
    NoGradGuard guard;
    double total = 0.0;
    for (std::size_t begin = 0; begin < samples.size(); begin += kEvalBatch) {
        const std::size_t end = std::min(samples.size(), begin + kEvalBatch);
        const Batch b = make_batch(samples, begin, end, series, window);
        const ForwardResult r = forward(model, b.q);
        total += loss_value(r.prediction, b.target, kind).item() * static_cast<double>(end - begin);
    }
    return total / static_cast<double>(samples.size());
}

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::string_view loss_kind_name(LossKind kind) { return kind == LossKind::Mse ? "mse" : "mae"; }

std::optional<LossKind> parse_loss_kind(std::string_view name) {
    if (name == "mse" || name == "MSE") return LossKind::Mse;
    if (name == "mae" || name == "MAE") return LossKind::Mae;
    return std::nullopt;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("train.learning_rate must be positive");
    }
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (max_epochs == 0) throw ConfigError("train.max_epochs must be positive");
    if (patience == 0) throw ConfigError("train.patience must be at least 1");
    if (patience >= max_epochs) throw ConfigError("train.patience must be below train.max_epochs");
    if (repeats == 0) throw ConfigError("train.repeats must be at least 1");
}

Tensor loss_value(const Tensor& prediction, const Tensor& target, LossKind kind) {
    const Tensor diff = sub(prediction, target);
    return mean_all(kind == LossKind::Mse ? square(diff) : abs_value(diff));
}

double loss_value(std::span<const double> prediction, std::span<const double> target, LossKind kind) {
    if (prediction.size() != target.size()) {
        throw ShapeError("loss_value", "length",
                         std::to_string(prediction.size()) + " vs " + std::to_string(target.size()));
    }
    if (prediction.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - target[i];
        total += kind == LossKind::Mse ? d * d : std::abs(d);
    }
    return total / static_cast<double>(prediction.size());
}

const OrderTrace& RunResult::trace(int order) const {
    for (const OrderTrace& t : traces) {
        if (t.order == order) return t;
    }
    throw UnsupportedOrderError("run has no order " + std::to_string(order));
}

std::vector<double> RunResult::mean_alpha(int order) const {
    const OrderTrace& t = trace(order);
    const std::size_t samples = sample_count();
    const std::size_t per = samples == 0 ? 0 : t.alpha.size() / samples;
    std::vector<double> mean(per, 0.0);
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t k = 0; k < per; ++k) mean[k] += t.alpha[s * per + k];
    }
    for (double& m : mean) m /= static_cast<double>(samples);
    return mean;
}

void run_inference(const DcitsModel& model, const std::vector<WindowSample>& samples, RunResult& result) {
    NoGradGuard guard;
    const ModelConfig& cfg = model.config();
    const std::size_t n = cfg.series;
    result.sample_t.clear();
    result.predictions.clear();
    result.traces.clear();
    for (const OrderStages& st : model.stages()) {
        OrderTrace t;
        t.order = st.order;
        t.lags = order_lags(cfg, st.order);
        const std::size_t per = n * n * t.lags;
        t.alpha.reserve(per * samples.size());
        t.focus.reserve(per * samples.size());
        t.coeffs.reserve(per * samples.size());
        result.traces.push_back(std::move(t));
    }
    for (std::size_t begin = 0; begin < samples.size(); begin += kEvalBatch) {
        const std::size_t end = std::min(samples.size(), begin + kEvalBatch);
        const Batch b = make_batch(samples, begin, end, n, cfg.window);
        const ForwardResult r = forward(model, b.q);
        const auto pred = r.prediction.values();
        result.predictions.insert(result.predictions.end(), pred.begin(), pred.end());
        for (std::size_t k = 0; k < r.orders.size(); ++k) {
            OrderTrace& t = result.traces[k];
            const OrderOutput& o = r.orders[k];
            t.alpha.insert(t.alpha.end(), o.alpha.values().begin(), o.alpha.values().end());
            t.focus.insert(t.focus.end(), o.focus.values().begin(), o.focus.values().end());
            t.coeffs.insert(t.coeffs.end(), o.coeffs.values().begin(), o.coeffs.values().end());
        }
        for (std::size_t s = begin; s < end; ++s) result.sample_t.push_back(samples[s].t);
    }
}

RunResult train_once(ModelConfig model_config, const SplitSet& split, const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (split.train.empty() || split.validation.empty() || split.test.empty()) {
        throw ConfigError("train_once needs non-empty train, validation and test sets");
    }
    model_config.seed = derive_seed(seed, "init");
    const std::size_t n = model_config.series;
    const std::size_t l = model_config.window;
    if (n != split.series || l != split.window) {
        throw ConfigError("model config (N=" + std::to_string(n) + ", L=" + std::to_string(l) +
                          ") does not match the split (N=" + std::to_string(split.series) +
                          ", L=" + std::to_string(split.window) + ")");
    }

    RunResult result{seed, DcitsModel(model_config), {}, {}, 0, 0.0, 0.0, 0.0, {}, {}, {}};
    DcitsModel& model = result.model;
    std::vector<Tensor> params = model.parameters();
    AdamState adam(params, AdamOptions{cfg.learning_rate});
    Rng shuffle_rng(derive_seed(seed, "shuffle"));

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);

    double best_val = std::numeric_limits<double>::infinity();
    DcitsModel best = model.clone();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        double epoch_total = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            const Batch b = make_batch(split.train, std::span<const std::size_t>(order).subspan(begin, end - begin),
                                       n, l);
            const ForwardResult r = forward(model, b.q);
            const Tensor loss = loss_value(r.prediction, b.target, cfg.loss);
            const double value = loss.item();
            if (!std::isfinite(value)) {
                throw NumericError("training loss is not finite at epoch " + std::to_string(epoch),
                                   static_cast<long>(epoch));
            }
            epoch_total += value * static_cast<double>(end - begin);
            for (Tensor& p : params) p.zero_grad();
            loss.backward();
            adam.step(params);
        }
        const double val = evaluate(model, split.validation, n, l, cfg.loss);
        if (!std::isfinite(val)) {
            throw NumericError("validation loss is not finite at epoch " + std::to_string(epoch),
                               static_cast<long>(epoch));
        }
        result.train_loss.push_back(epoch_total / static_cast<double>(order.size()));
        result.val_loss.push_back(val);
        if (val < best_val) {
            best_val = val;
            best.copy_parameters_from(model);
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    model.copy_parameters_from(best);

    run_inference(model, split.test, result);
    std::vector<double> targets;
    targets.reserve(split.test.size() * n);
    for (const WindowSample& s : split.test) targets.insert(targets.end(), s.target.begin(), s.target.end());
    result.test_mse = loss_value(result.predictions, targets, LossKind::Mse);
    result.test_mae = loss_value(result.predictions, targets, LossKind::Mae);
    result.test_loss = cfg.loss == LossKind::Mse ? result.test_mse : result.test_mae;
    return result;
}

bool is_significant(double mean, double std) {
    return std::abs(mean) > 2.0 * std && std::abs(mean) > kSignificanceFloor;
}

const OrderStats& CoefficientStats::order(int p) const {
    for (const OrderStats& o : orders) {
        if (o.order == p) return o;
    }
    throw UnsupportedOrderError("statistics have no order " + std::to_string(p));
}

CoefficientStats aggregate(const std::vector<const RunResult*>& runs, std::size_t series) {
    CoefficientStats stats;
    stats.series = series;
    stats.runs = runs.size();
    if (runs.empty()) return stats;
    for (const OrderTrace& t : runs.front()->traces) {
        OrderStats os;
        os.order = t.order;
        os.lags = t.lags;
        std::vector<std::vector<double>> per_run;
        for (const RunResult* r : runs) per_run.push_back(r->mean_alpha(t.order));
        const std::size_t size = per_run.front().size();
        os.mean.assign(size, 0.0);
        os.std.assign(size, 0.0);
        os.significant.assign(size, false);
        for (std::size_t k = 0; k < size; ++k) {
            std::vector<double> xs;
            for (const auto& m : per_run) xs.push_back(m[k]);
            const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            os.mean[k] = mean;
            os.std[k] = sample_std(xs, mean);
            os.significant[k] = is_significant(mean, os.std[k]);
        }
        stats.orders.push_back(std::move(os));
    }
    return stats;
}

std::vector<double> RepeatedResult::test_mse() const {
    std::vector<double> out;
    for (const RunResult& r : runs) out.push_back(r.test_mse);
    return out;
}

std::vector<double> RepeatedResult::test_losses() const {
    std::vector<double> out;
    for (const RunResult& r : runs) out.push_back(r.test_loss);
    return out;
}

RepeatedResult run_repeated(const ModelConfig& model_config, const SplitSet& split, const TrainConfig& cfg,
                            std::size_t jobs) {
    cfg.validate();
    model_config.validate();
    const std::size_t total = cfg.repeats;
    std::vector<std::optional<RunResult>> slots(total);
    std::vector<std::optional<RunFailure>> failed(total);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t r = next++; r < total; r = next++) {
            try {
                slots[r].emplace(train_once(model_config, split, cfg, derive_seed(cfg.seed, r)));
            } catch (const NumericError& e) {
                failed[r] = RunFailure{r, e.epoch(), e.what()};
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, total);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    RepeatedResult out;
    for (std::size_t r = 0; r < total; ++r) {
        if (slots[r]) {
            out.runs.push_back(std::move(*slots[r]));
            out.run_index.push_back(r);
        } else if (failed[r]) {
            out.failures.push_back(*failed[r]);
        }
    }
    if (out.runs.empty()) {
        const RunFailure& f = out.failures.front();
        throw NumericError("all " + std::to_string(total) + " runs failed; first: " + f.message, f.epoch);
    }
    std::vector<const RunResult*> ptrs;
    for (const RunResult& r : out.runs) ptrs.push_back(&r);
    out.stats = aggregate(ptrs, model_config.series);
    return out;
}

double stability_ratio(std::span<const double> losses) {
    if (losses.size() < 2) {
        throw ConfigError("stability ratio needs at least two runs");
    }
    const std::vector<double> xs(losses.begin(), losses.end());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (mean == 0.0) {
        throw NumericError("stability ratio undefined: mean loss is zero");
    }
    return sample_std(xs, mean) / mean;
}

void write_run_directory(const RunResult& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_checkpoint(run.model, dir / "checkpoint.json");
    {
        CsvWriter w(dir / "loss_curve.csv");
        w.header({"epoch", "train_loss", "val_loss"});
        for (std::size_t e = 0; e < run.val_loss.size(); ++e) {
            w.row({std::to_string(e + 1), format_double(run.train_loss[e]), format_double(run.val_loss[e])});
        }
    }
    const std::size_t n = run.model.config().series;
    for (const OrderTrace& t : run.traces) {
        CsvWriter w(dir / ("alpha_p" + std::to_string(t.order) + ".csv"));
        w.header({"n", "i", "j", "l", "value", "sample_t"});
        const std::size_t per = n * n * t.lags;
        for (std::size_t s = 0; s < run.sample_count(); ++s) {
            const std::string ts = std::to_string(run.sample_t[s]);
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < t.lags; ++j) {
                        const std::size_t lag = t.order == 0 ? 0 : column_to_lag(j, t.lags);
                        w.row({std::to_string(a + 1), std::to_string(i + 1), std::to_string(j + 1),
                               std::to_string(lag), format_double(t.alpha[s * per + (a * n + i) * t.lags + j]), ts});
                    }
                }
            }
        }
    }
}

void write_coefficient_stats(const CoefficientStats& stats, const std::filesystem::path& path) {
    CsvWriter w(path);
    w.header({"p", "n", "i", "l", "mean", "std", "significant"});
    const std::size_t n = stats.series;
    for (const OrderStats& o : stats.orders) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < o.lags; ++j) {
                    const std::size_t k = stats.index(a, i, j, o.lags);
                    const std::size_t lag = o.order == 0 ? 0 : column_to_lag(j, o.lags);
                    w.row({std::to_string(o.order), std::to_string(a + 1), std::to_string(i + 1), std::to_string(lag),
                           format_double(o.mean[k]), format_double(o.std[k]), o.significant[k] ? "1" : "0"});
                }
            }
        }
    }
}

}  // namespace dcits
