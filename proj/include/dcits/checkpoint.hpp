#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dcits/model.hpp"

namespace dcits {

inline constexpr const char* kCheckpointSchema = "dcits.checkpoint/1";

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Little-endian float64 blobs, independent of host byte order.
std::string encode_f64(std::span<const double> values);
std::vector<double> decode_f64(std::string_view text);

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const DcitsModel& model);
// Throws IoError on schema or shape mismatch.
DcitsModel checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const DcitsModel& model, const std::filesystem::path& path);
DcitsModel load_checkpoint(const std::filesystem::path& path);

}  // namespace dcits
