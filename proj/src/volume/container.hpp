#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "volume/volume.hpp"

namespace vlct::volume {

/// On-disk container: `<name>.ctvol.json` header plus `<name>.ctvol.bin`
/// payload (C-order little-endian int16).
struct ContainerPaths {
  std::filesystem::path header;
  std::filesystem::path payload;
};

/// Writes `<dir>/<name>.ctvol.json` + `.bin`. `name` defaults to the study id.
ContainerPaths write_container(const VoxelVolume& v, const std::filesystem::path& dir,
                               const std::string& name = "");

/// Reads a volume; payload path comes from the header unless given explicitly.
VoxelVolume read_container(const std::filesystem::path& header_path,
                           const std::filesystem::path& payload_path = {});

/// Reads only the header (dims/spacing/study id), leaving the payload on disk.
struct ContainerHeader {
  std::string study_id;
  std::array<int, 3> dims;
  std::array<double, 3> spacing;
  std::filesystem::path payload;
};
ContainerHeader read_container_header(const std::filesystem::path& header_path);

struct ManifestEntry {
  std::string study_id;
  std::string header_path;
  std::string payload_path;
  std::string patient_id;  // optional; defaults to the study id on read
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

}  // namespace vlct::volume
