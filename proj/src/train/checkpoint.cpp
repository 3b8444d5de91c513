#include "train/checkpoint.hpp"

#include <cstring>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "version.hpp"

namespace vlct::train {

namespace {
constexpr char kMagic[8] = {'V', 'L', 'C', 'T', 'C', 'K', 'P', '1'};
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const nlohmann::json& extra) {
  const Vector flat = flatten(params);
  json header = {
      {"model_config", params.config.to_json()},
      {"param_count", flat.size()},
      {"version", kVersion},
  };
  if (!extra.is_null()) header["meta"] = extra;
  const std::string header_str = header.dump();

  std::vector<unsigned char> blob;
  blob.reserve(12 + header_str.size() + flat.size() * 8);
  blob.insert(blob.end(), kMagic, kMagic + 8);
  const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
  for (int i = 0; i < 4; ++i) blob.push_back(static_cast<unsigned char>((len >> (8 * i)) & 0xFF));
  blob.insert(blob.end(), header_str.begin(), header_str.end());
  for (long i = 0; i < flat.size(); ++i) {
    std::uint64_t bits;
    const double v = flat[i];
    std::memcpy(&bits, &v, 8);
    for (int b = 0; b < 8; ++b) blob.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFF));
  }
  write_binary_file(path, blob.data(), blob.size());
}

ModelParams load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
  const std::vector<char> blob = read_binary_file(path);
  require(blob.size() >= 12 && std::memcmp(blob.data(), kMagic, 8) == 0, errc::io_error,
          "not a checkpoint file: " + path.string());
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) {
    len |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[8 + i])) << (8 * i);
  }
  require(blob.size() >= 12 + len, errc::io_error, "truncated checkpoint header");
  const json header = json::parse(std::string(blob.data() + 12, blob.data() + 12 + len));

  ModelParams params = ModelParams::init(ModelConfig::from_json(header.at("model_config")), 0);
  const long n = header.at("param_count").get<long>();
  require(n == param_count(params), errc::io_error, "checkpoint parameter count mismatch");
  require(blob.size() == 12 + len + static_cast<std::size_t>(n) * 8, errc::io_error,
          "truncated checkpoint payload");

  Vector flat(n);
  const char* at = blob.data() + 12 + len;
  for (long i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(at[i * 8 + b])) << (8 * b);
    }
    double v;
    std::memcpy(&v, &bits, 8);
    flat[i] = v;
  }
  unflatten(params, flat);
  if (meta != nullptr) *meta = header.value("meta", json());
  return params;
}

}  // namespace vlct::train
