#include "dcits/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "dcits/error.hpp"

namespace dcits {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t v = std::uint32_t{bytes[i]} << 16;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw IoError("base64 length is not a multiple of 4");
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::array<int, 4> d{};
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                d[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0 || (d[k] = decode_char(c)) < 0) {
                throw IoError("invalid base64 character");
            }
        }
        const std::uint32_t v = (d[0] << 18) | (d[1] << 12) | (d[2] << 6) | d[3];
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return out;
}

std::string encode_f64(std::span<const double> values) {
    std::vector<std::uint8_t> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    return base64_encode(bytes);
}

std::vector<double> decode_f64(std::string_view text) {
    const std::vector<std::uint8_t> bytes = base64_decode(text);
    if (bytes.size() % 8 != 0) {
        throw IoError("float64 blob length is not a multiple of 8");
    }
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[i * 8 + b]} << (8 * b);
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

json model_config_to_json(const ModelConfig& c) {
    json kernels = json::array();
    for (KernelLabel k : c.kernels) kernels.push_back(std::string(kernel_label_name(k)));
    return {{"series", c.series},
            {"window", c.window},
            {"orders", c.orders},
            {"kernels", kernels},
            {"hidden_layers", c.hidden_layers},
            {"hidden_width", c.hidden_width},
            {"temperature", c.temperature},
            {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.series = j.at("series").get<std::size_t>();
    c.window = j.at("window").get<std::size_t>();
    c.orders = j.at("orders").get<std::vector<int>>();
    c.kernels.clear();
    for (const json& k : j.at("kernels")) {
        const auto label = parse_kernel_label(k.get<std::string>());
        if (!label) throw IoError("unknown kernel label " + k.dump());
        c.kernels.push_back(*label);
    }
    c.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    c.hidden_width = j.at("hidden_width").get<std::size_t>();
    c.temperature = j.at("temperature").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json checkpoint_to_json(const DcitsModel& model) {
    json params = json::array();
    for (const Tensor& p : model.parameters()) {
        params.push_back({{"shape", p.shape()}, {"data", encode_f64(p.values())}});
    }
    return {{"schema", kCheckpointSchema}, {"config", model_config_to_json(model.config())}, {"parameters", params}};
}

DcitsModel checkpoint_from_json(const json& j) {
    if (j.value("schema", "") != kCheckpointSchema) {
        throw IoError("not a dcits checkpoint (schema " + j.value("schema", std::string("<missing>")) + ")");
    }
    DcitsModel model(model_config_from_json(j.at("config")));
    std::vector<Tensor> params = model.parameters();
    const json& stored = j.at("parameters");
    if (stored.size() != params.size()) {
        throw IoError("checkpoint has " + std::to_string(stored.size()) + " parameter tensors, model expects " +
                      std::to_string(params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Shape shape = stored[k].at("shape").get<Shape>();
        if (shape != params[k].shape()) {
            throw IoError("checkpoint tensor " + std::to_string(k) + " has shape " + shape_string(shape) +
                          ", expected " + shape_string(params[k].shape()));
        }
        const std::vector<double> values = decode_f64(stored[k].at("data").get<std::string>());
        if (values.size() != params[k].numel()) {
            throw IoError("checkpoint tensor " + std::to_string(k) + " has the wrong element count");
        }
        std::copy(values.begin(), values.end(), params[k].mutable_values().begin());
    }
    return model;
}

void save_checkpoint(const DcitsModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << checkpoint_to_json(model).dump(1) << '\n';
}

DcitsModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace dcits
