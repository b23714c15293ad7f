#include "dcits/summary.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "dcits/error.hpp"

namespace dcits {

using nlohmann::json;

namespace {

void require_known(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw IoError(where + " must be an object");
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw IoError("unknown field '" + key + "' in " + where);
    }
}

}  // namespace

json summary_to_json(const Summary& s) {
    json runs = json::array();
    for (const SummaryRun& r : s.runs) {
        runs.push_back({{"run", r.run},
                        {"seed", r.seed},
                        {"test_loss", r.test_loss},
                        {"test_mse", r.test_mse},
                        {"test_mae", r.test_mae},
                        {"epochs", r.epochs},
                        {"best_epoch", r.best_epoch}});
    }
    json support = json::array();
    for (const SummaryCoefficient& c : s.masked_support) {
        support.push_back({{"p", c.order}, {"n", c.n}, {"i", c.i}, {"l", c.lag}, {"mean", c.mean}, {"std", c.std}});
    }
    json rows = json::array();
    for (const SummaryWindowRow& r : s.window_search) {
        json row = {{"L", r.window}, {"mean", r.mean}, {"std", r.std}, {"normalized", r.normalized}};
        if (!r.error.empty()) row["error"] = r.error;
        rows.push_back(row);
    }
    json j = {{"schema", kSummarySchema},
              {"command", s.command},
              {"seed", s.seed},
              {"dataset", s.dataset},
              {"series", s.series},
              {"window", s.window ? json(*s.window) : json(nullptr)},
              {"orders", s.orders},
              {"loss", s.loss},
              {"runs", runs},
              {"failures", s.failures},
              {"stability_ratio", s.stability_ratio ? json(*s.stability_ratio) : json(nullptr)},
              {"masked_support", support},
              {"lag_matrices", s.lag_matrices},
              {"bias", s.bias},
              {"window_search", rows},
              {"best_window", s.best_window ? json(*s.best_window) : json(nullptr)}};
    return j;
}

Summary summary_from_json(const json& j) {
    require_known(j,
                  {"schema", "command", "seed", "dataset", "series", "window", "orders", "loss", "runs", "failures",
                   "stability_ratio", "masked_support", "lag_matrices", "bias", "window_search", "best_window"},
                  "summary");
    if (j.value("schema", "") != kSummarySchema) {
        throw IoError("unsupported summary schema '" + j.value("schema", std::string()) + "'");
    }
    Summary s;
    try {
        s.command = j.at("command").get<std::string>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.dataset = j.at("dataset").get<std::string>();
        s.series = j.at("series").get<std::size_t>();
        if (!j.at("window").is_null()) s.window = j["window"].get<std::size_t>();
        s.orders = j.at("orders").get<std::vector<int>>();
        s.loss = j.at("loss").get<std::string>();
        for (const json& r : j.at("runs")) {
            require_known(r, {"run", "seed", "test_loss", "test_mse", "test_mae", "epochs", "best_epoch"}, "runs[]");
            s.runs.push_back({r.at("run").get<std::size_t>(), r.at("seed").get<std::uint64_t>(),
                              r.at("test_loss").get<double>(), r.at("test_mse").get<double>(),
                              r.at("test_mae").get<double>(), r.at("epochs").get<std::size_t>(),
                              r.at("best_epoch").get<std::size_t>()});
        }
        s.failures = j.at("failures").get<std::vector<std::string>>();
        if (!j.at("stability_ratio").is_null()) s.stability_ratio = j["stability_ratio"].get<double>();
        for (const json& c : j.at("masked_support")) {
            require_known(c, {"p", "n", "i", "l", "mean", "std"}, "masked_support[]");
            s.masked_support.push_back({c.at("p").get<int>(), c.at("n").get<std::size_t>(),
                                        c.at("i").get<std::size_t>(), c.at("l").get<std::size_t>(),
                                        c.at("mean").get<double>(), c.at("std").get<double>()});
        }
        s.lag_matrices = j.at("lag_matrices").get<std::vector<std::vector<double>>>();
        s.bias = j.at("bias").get<std::vector<double>>();
        for (const json& r : j.at("window_search")) {
            require_known(r, {"L", "mean", "std", "normalized", "error"}, "window_search[]");
            s.window_search.push_back({r.at("L").get<std::size_t>(), r.at("mean").get<double>(),
                                       r.at("std").get<double>(), r.at("normalized").get<double>(),
                                       r.value("error", std::string())});
        }
        if (!j.at("best_window").is_null()) s.best_window = j["best_window"].get<std::size_t>();
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed summary: ") + e.what());
    }
    return s;
}

void write_summary(const Summary& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << summary_to_json(s).dump(2) << '\n';
}

Summary read_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open summary " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed summary " + path.string() + ": " + e.what());
    }
    return summary_from_json(j);
}

void fill_training_summary(Summary& s, const RepeatedResult& result) {
    for (std::size_t k = 0; k < result.runs.size(); ++k) {
        const RunResult& r = result.runs[k];
        s.runs.push_back({result.run_index[k] + 1, r.seed, r.test_loss, r.test_mse, r.test_mae, r.val_loss.size(),
                          r.best_epoch + 1});
    }
    for (const RunFailure& f : result.failures) {
        s.failures.push_back("run " + std::to_string(f.run + 1) + ": " + f.message);
    }
    const std::vector<double> mse = result.test_mse();
    if (mse.size() >= 2) {
        try {
            s.stability_ratio = stability_ratio(mse);
        } catch (const NumericError&) {
        }
    }
    const CoefficientStats& st = result.stats;
    for (const OrderStats& os : st.orders) {
        for (std::size_t n = 0; n < st.series; ++n) {
            for (std::size_t i = 0; i < st.series; ++i) {
                for (std::size_t col = 0; col < os.lags; ++col) {
                    const std::size_t k = st.index(n, i, col, os.lags);
                    if (!os.significant[k]) continue;
                    s.masked_support.push_back({os.order, n + 1, i + 1,
                                                os.order == 0 ? 0 : column_to_lag(col, os.lags), os.mean[k],
                                                os.std[k]});
                }
            }
        }
    }
    s.lag_matrices = lag_matrices(st);
    if (std::any_of(st.orders.begin(), st.orders.end(), [](const OrderStats& o) { return o.order == 0; })) {
        s.bias = mean_bias(st);
    }
}

}  // namespace dcits
