#include "dcits/series_io.hpp"

#include <fstream>
#include <sstream>

#include "dcits/csv.hpp"
#include "dcits/error.hpp"

namespace dcits {

using nlohmann::json;

json spec_to_json(const GeneratorSpec& spec) {
    json j;
    j["kind"] = std::string(dataset_kind_name(spec.kind));
    j["series"] = spec.series;
    j["length"] = spec.length;
    j["burn_in"] = spec.burn_in;
    j["noise"] = {{"frequency", spec.noise.frequency}, {"variance", spec.noise.variance}};
    j["seed"] = spec.seed;
    if (spec.kind == DatasetKind::Var2) {
        j["var2"] = {{"a1", spec.var2.a1}, {"a2", spec.var2.a2}};
    }
    if (spec.kind == DatasetKind::Cubic) {
        j["cubic"] = {{"a", spec.cubic.a},
                      {"map_noise",
                       {{"frequency", spec.cubic.map_noise.frequency}, {"variance", spec.cubic.map_noise.variance}}}};
    }
    if (spec.kind == DatasetKind::Dataset8) {
        const Dataset8Spec& d = spec.dataset8;
        j["dataset8"] = {{"b_low", d.b_low},
                         {"b_high", d.b_high},
                         {"persistence_mean", d.persistence_mean},
                         {"persistence_std", d.persistence_std},
                         {"persistence_min", d.persistence_min}};
    }
    return j;
}

GeneratorSpec spec_from_json(const json& j) {
    const auto kind = parse_dataset_kind(j.at("kind").get<std::string>());
    if (!kind) {
        throw ConfigError("unknown dataset kind " + j.at("kind").dump());
    }
    GeneratorSpec spec = GeneratorSpec::defaults(*kind);
    spec.series = j.value("series", spec.series);
    spec.length = j.value("length", spec.length);
    spec.burn_in = j.value("burn_in", spec.burn_in);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("noise")) {
        spec.noise.frequency = j["noise"].value("frequency", spec.noise.frequency);
        spec.noise.variance = j["noise"].value("variance", spec.noise.variance);
    }
    if (j.contains("var2")) {
        spec.var2.a1 = j["var2"].at("a1").get<std::vector<double>>();
        spec.var2.a2 = j["var2"].at("a2").get<std::vector<double>>();
    }
    if (j.contains("cubic")) {
        spec.cubic.a = j["cubic"].value("a", spec.cubic.a);
        if (j["cubic"].contains("map_noise")) {
            spec.cubic.map_noise.frequency = j["cubic"]["map_noise"].value("frequency", 0.0);
            spec.cubic.map_noise.variance = j["cubic"]["map_noise"].value("variance", 0.0);
        }
    }
    if (j.contains("dataset8")) {
        Dataset8Spec& d = spec.dataset8;
        const json& s = j["dataset8"];
        d.b_low = s.value("b_low", d.b_low);
        d.b_high = s.value("b_high", d.b_high);
        d.persistence_mean = s.value("persistence_mean", d.persistence_mean);
        d.persistence_std = s.value("persistence_std", d.persistence_std);
        d.persistence_min = s.value("persistence_min", d.persistence_min);
    }
    return spec;
}

json ground_truth_to_json(const GroundTruth& truth) {
    json terms = json::array();
    for (const GroundTruthTerm& t : truth.terms) {
        terms.push_back({{"target", t.target + 1},
                         {"source", t.source + 1},
                         {"lag", t.lag},
                         {"order", t.order},
                         {"coefficient", t.coefficient},
                         {"regime", std::string(regime_name(t.regime))}});
    }
    json j = {{"terms", terms}, {"bias", truth.bias}, {"activation", truth.tanh_activation ? "tanh" : "identity"}};
    if (truth.level_series) {
        j["level_series"] = *truth.level_series + 1;
        j["level"] = truth.level;
        j["regime"] = truth.regime;
    }
    return j;
}

GroundTruth ground_truth_from_json(const json& j) {
    GroundTruth gt;
    for (const json& t : j.at("terms")) {
        GroundTruthTerm term;
        term.target = t.at("target").get<std::size_t>() - 1;
        term.source = t.at("source").get<std::size_t>() - 1;
        term.lag = t.at("lag").get<std::size_t>();
        term.order = t.at("order").get<int>();
        term.coefficient = t.at("coefficient").get<double>();
        const std::string regime = t.value("regime", "any");
        term.regime = regime == "high" ? Regime::High : regime == "low" ? Regime::Low : Regime::Any;
        gt.terms.push_back(term);
    }
    gt.bias = j.at("bias").get<std::vector<double>>();
    gt.tanh_activation = j.value("activation", "identity") == "tanh";
    if (j.contains("level_series")) {
        gt.level_series = j["level_series"].get<std::size_t>() - 1;
        gt.level = j.at("level").get<std::vector<double>>();
        gt.regime = j.at("regime").get<std::vector<int>>();
    }
    return gt;
}

void write_series_csv(const SeriesMatrix& series, const std::filesystem::path& path) {
    CsvWriter w(path);
    w.comment("dcits series matrix: one row per series, one column per time step");
    w.comment("kind=" + std::string(dataset_kind_name(series.spec.kind)));
    w.comment("series=" + std::to_string(series.series));
    w.comment("length=" + std::to_string(series.length));
    w.comment("seed=" + std::to_string(series.spec.seed));
    w.comment("noise_frequency=" + format_double(series.spec.noise.frequency));
    w.comment("noise_variance=" + format_double(series.spec.noise.variance));
    for (std::size_t n = 0; n < series.series; ++n) {
        const auto r = series.row(n);
        w.numbers(std::vector<double>(r.begin(), r.end()));
    }
}

SeriesMatrix read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open series file " + path.string());
    }
    SeriesMatrix out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line.front() == '#') continue;
        std::vector<double> row;
        for (const std::string& f : split_csv_record(line)) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(f, &used));
            } catch (const std::exception&) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + f + "'");
            }
        }
        if (out.series == 0) {
            out.length = row.size();
        } else if (row.size() != out.length) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
        }
        out.values.insert(out.values.end(), row.begin(), row.end());
        ++out.series;
    }
    if (out.series == 0) {
        throw IoError("series file " + path.string() + " has no data rows");
    }
    out.spec.series = out.series;
    out.spec.length = out.length;
    return out;
}

void write_series_sidecar(const SeriesMatrix& series, const std::filesystem::path& path) {
    json j = {{"schema", kSeriesSchema},
              {"spec", spec_to_json(series.spec)},
              {"ground_truth", ground_truth_to_json(series.truth)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << j.dump(2) << '\n';
}

SeriesMatrix load_series(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path) {
    SeriesMatrix s = read_series_csv(csv_path);
    if (std::filesystem::exists(sidecar_path)) {
        std::ifstream in(sidecar_path);
        const json j = json::parse(in);
        if (j.value("schema", "") != kSeriesSchema) {
            throw IoError("unexpected sidecar schema in " + sidecar_path.string());
        }
        s.spec = spec_from_json(j.at("spec"));
        s.truth = ground_truth_from_json(j.at("ground_truth"));
        if (s.spec.series != s.series || s.spec.length != s.length) {
            throw IoError("sidecar " + sidecar_path.string() + " does not match the CSV dimensions");
        }
    }
    return s;
}

}  // namespace dcits
