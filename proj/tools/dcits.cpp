// dcits: generate | train | window-search | reproduce
//
// Exit codes: 0 ok, 1 I/O or reproduce failure, 2 usage or configuration
// error, 3 numeric failure, 4 output directory exists (use --force).

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcits/config.hpp"
#include "dcits/csv.hpp"
#include "dcits/error.hpp"
#include "dcits/experiment.hpp"
#include "dcits/interpret.hpp"
#include "dcits/reproduce.hpp"
#include "dcits/series_io.hpp"
#include "dcits/summary.hpp"

namespace fs = std::filesystem;
using namespace dcits;

namespace {

struct WouldOverwrite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    bool force = false;
    std::string suite;
};

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path prepare_out(const Options& o) {
    if (o.out.empty()) throw ConfigError("--out DIR is required");
    const fs::path dir(o.out);
    if (fs::exists(dir) && !(fs::is_directory(dir) && fs::is_empty(dir)) && !o.force) {
        throw WouldOverwrite("output " + dir.string() + " already exists; pass --force to overwrite");
    }
    fs::create_directories(dir);
    return dir;
}

// Timestamps live only here so every other output is reproducible.
void write_metadata(const fs::path& dir, const std::string& command, const std::string& started) {
    const nlohmann::json j = {{"command", command}, {"started", started}, {"finished", timestamp()}};
    std::ofstream(dir / "metadata.json") << j.dump(2) << '\n';
}

ExperimentConfig load(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config PATH is required");
    return normalize(load_config(o.config), o.seed);
}

void write_inputs(const fs::path& dir, const ExperimentConfig& cfg, const SeriesMatrix& series) {
    std::ofstream(dir / "config.txt") << to_text(cfg);
    if (!cfg.data_path) {
        write_series_csv(series, dir / "series.csv");
        write_series_sidecar(series, dir / "series.json");
    }
}

Summary base_summary(const std::string& command, const ExperimentConfig& cfg, const SeriesMatrix& series) {
    Summary s;
    s.command = command;
    s.seed = cfg.seed;
    s.dataset = cfg.data_path ? cfg.data_path->string() : std::string(dataset_kind_name(cfg.generator.kind));
    s.series = series.series;
    s.orders = cfg.model.orders;
    std::sort(s.orders.begin(), s.orders.end());
    s.loss = std::string(loss_kind_name(cfg.train.loss));
    return s;
}

int cmd_generate(const Options& o) {
    const std::string started = timestamp();
    const ExperimentConfig cfg = load(o);
    if (cfg.data_path) throw ConfigError("generate needs a generator section, not data.path");
    const fs::path dir = prepare_out(o);
    const SeriesMatrix series = generate(cfg.generator);
    write_inputs(dir, cfg, series);
    write_metadata(dir, "generate", started);
    std::cout << "wrote " << series.series << " x " << series.length << " series to " << (dir / "series.csv").string()
              << '\n';
    return 0;
}

int cmd_train(const Options& o) {
    const std::string started = timestamp();
    const ExperimentConfig cfg = load(o);
    if (!cfg.window) throw ConfigError("train needs window.length (use window-search for search.*)");
    const fs::path dir = prepare_out(o);
    const ExperimentOutcome out = run_experiment(cfg, o.jobs);
    write_inputs(dir, cfg, out.series);

    const RepeatedResult& rr = out.result;
    for (std::size_t k = 0; k < rr.runs.size(); ++k) {
        const RunResult& run = rr.runs[k];
        const fs::path run_dir = dir / ("run_" + std::to_string(rr.run_index[k] + 1));
        write_run_directory(run, run_dir);
        if (!cfg.report_alpha) {
            for (const OrderTrace& t : run.traces) fs::remove(run_dir / ("alpha_p" + std::to_string(t.order) + ".csv"));
        }
    }
    write_coefficient_stats(rr.stats, dir / "coefficients.csv");
    if (cfg.report_heatmaps) write_heatmaps(rr.stats, dir / "heatmaps");
    const std::vector<std::vector<double>> mats = lag_matrices(rr.stats);
    fs::create_directories(dir / "lag_matrices");
    for (std::size_t l = 0; l < mats.size(); ++l) {
        write_matrix_csv(dir / "lag_matrices" / ("A" + std::to_string(l + 1) + ".csv"), mats[l], out.series.series,
                         out.series.series);
    }
    Summary s = base_summary("train", cfg, out.series);
    s.window = cfg.window;
    fill_training_summary(s, rr);
    write_summary(s, dir / "summary.json");
    write_metadata(dir, "train", started);

    for (const SummaryRun& r : s.runs) {
        std::cout << "run " << r.run << ": test " << s.loss << " " << format_double(r.test_loss) << ", epochs "
                  << r.epochs << '\n';
    }
    for (const std::string& f : s.failures) std::cout << "failed " << f << '\n';
    if (s.stability_ratio) std::cout << "stability ratio " << format_double(*s.stability_ratio) << '\n';
    std::cout << s.masked_support.size() << " significant coefficients; see " << (dir / "summary.json").string()
              << '\n';
    return 0;
}

int cmd_window_search(const Options& o) {
    const std::string started = timestamp();
    ExperimentConfig cfg = load(o);
    WindowSearchConfig search;
    if (cfg.search) {
        search = *cfg.search;
    } else if (cfg.window) {
        search = {*cfg.window, *cfg.window, 1};
    } else {
        throw ConfigError("window-search needs search.* keys or window.length");
    }
    const fs::path dir = prepare_out(o);
    const SeriesMatrix series = experiment_series(cfg);
    write_inputs(dir, cfg, series);
    const WindowSearchResult ws = window_search_loss(series, cfg.model, cfg.train, search, cfg.ratios, o.jobs);
    {
        CsvWriter w(dir / "window_search.csv");
        w.header({"L", "mean", "std", "normalized"});
        for (const WindowSearchRow& r : ws.rows) {
            w.row({std::to_string(r.window), format_double(r.mean), format_double(r.std),
                   format_double(r.normalized)});
        }
    }
    Summary s = base_summary("window-search", cfg, series);
    for (const WindowSearchRow& r : ws.rows) {
        s.window_search.push_back({r.window, r.mean, r.std, r.normalized, r.error});
        std::cout << "L=" << r.window << "  mean " << format_double(r.mean) << "  std " << format_double(r.std)
                  << (r.error.empty() ? "" : "  error: " + r.error) << '\n';
    }
    if (ws.best_window == 0) throw NumericError("training failed for every window length");
    s.best_window = ws.best_window;
    write_summary(s, dir / "summary.json");
    write_metadata(dir, "window-search", started);
    std::cout << "L_o = " << ws.best_window << '\n';
    return 0;
}

int cmd_reproduce(const Options& o) {
    std::vector<std::string> suites;
    if (o.suite == "all") {
        suites = suite_names();
    } else if (is_suite(o.suite)) {
        suites = {o.suite};
    } else {
        throw ConfigError("unknown suite '" + o.suite + "'");
    }
    ReproduceOptions ro;
    ro.seed = o.seed.value_or(1);
    ro.jobs = o.jobs;
    ro.log = &std::cerr;
    if (!o.out.empty()) ro.out_dir = prepare_out(o);
    bool ok = true;
    std::vector<std::pair<std::string, bool>> status;
    for (const std::string& suite : suites) {
        const SuiteReport report = run_suite(suite, ro);
        print_report(report, std::cout);
        std::cout.flush();
        status.emplace_back(suite, report.passed());
        ok = ok && report.passed();
    }
    if (suites.size() > 1) {
        for (const auto& [suite, passed] : status) std::cout << (passed ? "passed  " : "FAILED  ") << suite << '\n';
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DCIts: interpretable multivariate time-series forecasting"};
    Options o;
    app.add_option("--config", o.config, "Experiment config file (key=value)");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--seed", o.seed, "Master seed (overrides the config)");
    app.add_option("--jobs", o.jobs, "Parallel training runs")->check(CLI::PositiveNumber);
    app.add_flag("--force", o.force, "Overwrite an existing output directory");
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Write a synthetic series and its ground truth")->fallthrough();
    auto* train = app.add_subcommand("train", "Train R models and export interpretability reports")->fallthrough();
    auto* search = app.add_subcommand("window-search", "Tabulate test loss by window length")->fallthrough();
    auto* repro = app.add_subcommand("reproduce", "Run a reference suite and compare with expected values")
                      ->fallthrough();
    repro->add_option("suite", o.suite, "var2, dataset1..dataset8, cubic, window-search or all")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(o);
        if (train->parsed()) return cmd_train(o);
        if (search->parsed()) return cmd_window_search(o);
        if (repro->parsed()) return cmd_reproduce(o);
    } catch (const WouldOverwrite& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const UnsupportedOrderError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
