#include "volume/container.hpp"

#include <cstring>

#include "common/error.hpp"
#include "common/jsonl.hpp"

namespace vlct::volume {

namespace fs = std::filesystem;

namespace {
constexpr const char* kDtype = "int16le";

std::vector<unsigned char> encode_payload(const std::vector<std::int16_t>& data) {
  std::vector<unsigned char> bytes(data.size() * 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(data[i]);
    bytes[2 * i] = static_cast<unsigned char>(u & 0xFF);
    bytes[2 * i + 1] = static_cast<unsigned char>(u >> 8);
  }
  return bytes;
}

std::vector<std::int16_t> decode_payload(const std::vector<char>& bytes) {
  require(bytes.size() % 2 == 0, errc::io_error, "payload has odd byte count");
  std::vector<std::int16_t> data(bytes.size() / 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto lo = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[2 * i]));
    const auto hi = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[2 * i + 1]));
    data[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
  }
  return data;
}
}  // namespace

ContainerPaths write_container(const VoxelVolume& v, const fs::path& dir, const std::string& name) {
  v.validate();
  const std::string base = name.empty() ? v.study_id : name;
  ContainerPaths paths{dir / (base + ".ctvol.json"), dir / (base + ".ctvol.bin")};

  json header = {
      {"study_id", v.study_id},
      {"dims", {v.dims[0], v.dims[1], v.dims[2]}},
      {"spacing_mm", {v.spacing[0], v.spacing[1], v.spacing[2]}},
      {"dtype", kDtype},
      {"payload", paths.payload.filename().string()},
  };
  write_json_file(paths.header, header);
  const auto bytes = encode_payload(v.data);
  write_binary_file(paths.payload, bytes.data(), bytes.size());
  return paths;
}

ContainerHeader read_container_header(const fs::path& header_path) {
  const json h = read_json_file(header_path);
  require(h.value("dtype", "") == kDtype, errc::io_error,
          "unsupported dtype in " + header_path.string());
  ContainerHeader out;
  out.study_id = h.at("study_id").get<std::string>();
  const auto& d = h.at("dims");
  const auto& s = h.at("spacing_mm");
  require(d.size() == 3 && s.size() == 3, errc::io_error, "malformed container header");
  for (int i = 0; i < 3; ++i) {
    out.dims[i] = d[i].get<int>();
    out.spacing[i] = s[i].get<double>();
  }
  out.payload = header_path.parent_path() / h.at("payload").get<std::string>();
  return out;
}

VoxelVolume read_container(const fs::path& header_path, const fs::path& payload_path) {
  const ContainerHeader h = read_container_header(header_path);
  VoxelVolume v;
  v.study_id = h.study_id;
  v.dims = h.dims;
  v.spacing = h.spacing;
  const fs::path payload = payload_path.empty() ? h.payload : payload_path;
  v.data = decode_payload(read_binary_file(payload));
  v.validate();
  return v;
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::vector<ManifestEntry> out;
  for (const json& r : read_jsonl(path)) {
    ManifestEntry e{r.at("study_id").get<std::string>(),
                    r.at("header_path").get<std::string>(),
                    r.at("payload_path").get<std::string>(),
                    r.value("patient_id", "")};
    if (e.patient_id.empty()) e.patient_id = e.study_id;
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::vector<json> records;
  records.reserve(entries.size());
  for (const ManifestEntry& e : entries) {
    json r = {{"study_id", e.study_id},
              {"header_path", e.header_path},
              {"payload_path", e.payload_path}};
    if (!e.patient_id.empty()) r["patient_id"] = e.patient_id;
    records.push_back(std::move(r));
  }
  write_jsonl(path, records);
}

}  // namespace vlct::volume
