#include "dcits/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dcits/csv.hpp"
#include "dcits/error.hpp"
#include "dcits/rng.hpp"

namespace dcits {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("bad value for " + key + ": '" + v + "'");
    }
    return out;
}

double parse_real(const std::string& key, const std::string& v) { return parse_number<double>(key, v); }
std::size_t parse_size(const std::string& key, const std::string& v) { return parse_number<std::size_t>(key, v); }
std::uint64_t parse_u64(const std::string& key, const std::string& v) { return parse_number<std::uint64_t>(key, v); }

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::vector<double> parse_reals(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const std::string& item : split_list(v)) out.push_back(parse_real(key, item));
    return out;
}

std::string join_reals(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += format_double(xs[i]);
    }
    return out;
}

WindowSearchConfig& search_of(ExperimentConfig& c) {
    if (!c.search) c.search.emplace();
    return *c.search;
}

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& v) {
    GeneratorSpec& g = c.generator;
    if (key == "seed") c.seed = parse_u64(key, v);
    else if (key == "generator.kind") {
        const auto kind = parse_dataset_kind(v);
        if (!kind) throw ConfigError("unknown generator.kind '" + v + "'");
        // Keep explicit keys applied so far; defaults depend on the kind.
        GeneratorSpec d = GeneratorSpec::defaults(*kind);
        d.seed = g.seed;
        g = d;
    }
    else if (key == "generator.series") g.series = parse_size(key, v);
    else if (key == "generator.length") g.length = parse_size(key, v);
    else if (key == "generator.burn_in") g.burn_in = parse_size(key, v);
    else if (key == "generator.noise_frequency") g.noise.frequency = parse_real(key, v);
    else if (key == "generator.noise_variance") g.noise.variance = parse_real(key, v);
    else if (key == "generator.seed") g.seed = parse_u64(key, v);
    else if (key == "generator.var2_a1") g.var2.a1 = parse_reals(key, v);
    else if (key == "generator.var2_a2") g.var2.a2 = parse_reals(key, v);
    else if (key == "generator.cubic_a") g.cubic.a = parse_real(key, v);
    else if (key == "generator.cubic_noise_frequency") g.cubic.map_noise.frequency = parse_real(key, v);
    else if (key == "generator.cubic_noise_variance") g.cubic.map_noise.variance = parse_real(key, v);
    else if (key == "generator.d8_b_low") g.dataset8.b_low = parse_real(key, v);
    else if (key == "generator.d8_b_high") g.dataset8.b_high = parse_real(key, v);
    else if (key == "generator.d8_persistence_mean") g.dataset8.persistence_mean = parse_real(key, v);
    else if (key == "generator.d8_persistence_std") g.dataset8.persistence_std = parse_real(key, v);
    else if (key == "generator.d8_persistence_min") g.dataset8.persistence_min = parse_size(key, v);
    else if (key == "data.path") c.data_path = std::filesystem::path(v);
    else if (key == "window.length") c.window = parse_size(key, v);
    else if (key == "search.l_min") search_of(c).l_min = parse_size(key, v);
    else if (key == "search.l_max") search_of(c).l_max = parse_size(key, v);
    else if (key == "search.l_step") search_of(c).l_step = parse_size(key, v);
    else if (key == "model.orders") {
        c.model.orders.clear();
        for (const std::string& item : split_list(v)) c.model.orders.push_back(parse_number<int>(key, item));
    }
    else if (key == "model.kernels") {
        c.model.kernels.clear();
        for (const std::string& item : split_list(v)) {
            const auto label = parse_kernel_label(item);
            if (!label) throw ConfigError("unknown kernel '" + item + "'");
            c.model.kernels.push_back(*label);
        }
    }
    else if (key == "model.hidden_layers") c.model.hidden_layers = parse_size(key, v);
    else if (key == "model.hidden_width") c.model.hidden_width = parse_size(key, v);
    else if (key == "model.temperature") c.model.temperature = parse_real(key, v);
    else if (key == "train.loss") {
        const auto loss = parse_loss_kind(v);
        if (!loss) throw ConfigError("unknown train.loss '" + v + "'");
        c.train.loss = *loss;
    }
    else if (key == "train.learning_rate") c.train.learning_rate = parse_real(key, v);
    else if (key == "train.batch_size") c.train.batch_size = parse_size(key, v);
    else if (key == "train.max_epochs") c.train.max_epochs = parse_size(key, v);
    else if (key == "train.patience") c.train.patience = parse_size(key, v);
    else if (key == "train.repeats") c.train.repeats = parse_size(key, v);
    else if (key == "train.seed") c.train.seed = parse_u64(key, v);
    else if (key == "split.train") c.ratios.train = parse_real(key, v);
    else if (key == "split.validation") c.ratios.validation = parse_real(key, v);
    else if (key == "split.test") c.ratios.test = parse_real(key, v);
    else if (key == "split.standardize") c.standardize = parse_bool(key, v);
    else if (key == "report.alpha") c.report_alpha = parse_bool(key, v);
    else if (key == "report.heatmaps") c.report_heatmaps = parse_bool(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig c;
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (c.explicit_keys.count(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        c.explicit_keys[key] = value;
        entries.emplace_back(key, value);
    }
    // The kind resets generator defaults, so it is applied first.
    if (auto it = c.explicit_keys.find("generator.kind"); it != c.explicit_keys.end()) {
        apply_key(c, it->first, it->second);
    }
    for (const auto& [key, value] : entries) {
        if (key != "generator.kind") apply_key(c, key, value);
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ExperimentConfig normalize(ExperimentConfig c, std::optional<std::uint64_t> override_seed) {
    if (override_seed) c.seed = *override_seed;
    const auto has = [&](const char* key) { return c.explicit_keys.count(key) > 0; };
    if (!has("generator.seed")) c.generator.seed = derive_seed(c.seed, "generator");
    if (!has("train.seed")) c.train.seed = derive_seed(c.seed, "train");
    c.model.seed = derive_seed(c.train.seed, "model");
    if (c.window && c.search) {
        throw ConfigError("window.length and search.* are mutually exclusive");
    }
    if (!c.data_path) c.generator = c.generator.normalized();
    c.train.validate();
    if (c.search) c.search->validate();
    if (c.window && *c.window == 0) throw ConfigError("window.length must be positive");
    return c;
}

std::string to_text(const ExperimentConfig& c) {
    std::ostringstream o;
    const GeneratorSpec& g = c.generator;
    o << "seed=" << c.seed << '\n';
    if (c.data_path) {
        o << "data.path=" << c.data_path->string() << '\n';
    } else {
        o << "generator.kind=" << dataset_kind_name(g.kind) << '\n';
        o << "generator.series=" << g.series << '\n';
        o << "generator.length=" << g.length << '\n';
        o << "generator.burn_in=" << g.burn_in << '\n';
        o << "generator.noise_frequency=" << format_double(g.noise.frequency) << '\n';
        o << "generator.noise_variance=" << format_double(g.noise.variance) << '\n';
        o << "generator.seed=" << g.seed << '\n';
        if (g.kind == DatasetKind::Var2) {
            o << "generator.var2_a1=" << join_reals(g.var2.a1) << '\n';
            o << "generator.var2_a2=" << join_reals(g.var2.a2) << '\n';
        }
        if (g.kind == DatasetKind::Cubic) {
            o << "generator.cubic_a=" << format_double(g.cubic.a) << '\n';
            o << "generator.cubic_noise_frequency=" << format_double(g.cubic.map_noise.frequency) << '\n';
            o << "generator.cubic_noise_variance=" << format_double(g.cubic.map_noise.variance) << '\n';
        }
        if (g.kind == DatasetKind::Dataset8) {
            o << "generator.d8_b_low=" << format_double(g.dataset8.b_low) << '\n';
            o << "generator.d8_b_high=" << format_double(g.dataset8.b_high) << '\n';
            o << "generator.d8_persistence_mean=" << format_double(g.dataset8.persistence_mean) << '\n';
            o << "generator.d8_persistence_std=" << format_double(g.dataset8.persistence_std) << '\n';
            o << "generator.d8_persistence_min=" << g.dataset8.persistence_min << '\n';
        }
    }
    if (c.window) o << "window.length=" << *c.window << '\n';
    if (c.search) {
        o << "search.l_min=" << c.search->l_min << '\n';
        o << "search.l_max=" << c.search->l_max << '\n';
        o << "search.l_step=" << c.search->l_step << '\n';
    }
    o << "model.orders=";
    for (std::size_t i = 0; i < c.model.orders.size(); ++i) o << (i ? "," : "") << c.model.orders[i];
    o << '\n' << "model.kernels=";
    for (std::size_t i = 0; i < c.model.kernels.size(); ++i) {
        o << (i ? "," : "") << kernel_label_name(c.model.kernels[i]);
    }
    o << '\n';
    o << "model.hidden_layers=" << c.model.hidden_layers << '\n';
    o << "model.hidden_width=" << c.model.hidden_width << '\n';
    o << "model.temperature=" << format_double(c.model.temperature) << '\n';
    o << "train.loss=" << loss_kind_name(c.train.loss) << '\n';
    o << "train.learning_rate=" << format_double(c.train.learning_rate) << '\n';
    o << "train.batch_size=" << c.train.batch_size << '\n';
    o << "train.max_epochs=" << c.train.max_epochs << '\n';
    o << "train.patience=" << c.train.patience << '\n';
    o << "train.repeats=" << c.train.repeats << '\n';
    o << "train.seed=" << c.train.seed << '\n';
    o << "split.train=" << format_double(c.ratios.train) << '\n';
    o << "split.validation=" << format_double(c.ratios.validation) << '\n';
    o << "split.test=" << format_double(c.ratios.test) << '\n';
    o << "split.standardize=" << (c.standardize ? "true" : "false") << '\n';
    o << "report.alpha=" << (c.report_alpha ? "true" : "false") << '\n';
    o << "report.heatmaps=" << (c.report_heatmaps ? "true" : "false") << '\n';
    return o.str();
}

}  // namespace dcits
