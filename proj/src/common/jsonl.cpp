#include "common/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace vlct {

namespace fs = std::filesystem;

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      fail(errc::io_error, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), errc::io_error, "cannot write " + path.string());
  for (const json& r : records) out << r.dump() << '\n';
  require(out.good(), errc::io_error, "write failed for " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(errc::io_error, path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& value) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), errc::io_error, "cannot write " + path.string());
  out << value.dump(2) << '\n';
  require(out.good(), errc::io_error, "write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), errc::io_error, "cannot write " + path.string());
  out << text;
  require(out.good(), errc::io_error, "write failed for " + path.string());
}

void write_binary_file(const fs::path& path, const void* data, std::size_t size) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), errc::io_error, "cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  require(out.good(), errc::io_error, "write failed for " + path.string());
}

std::vector<char> read_binary_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), errc::io_error, "cannot open " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(size));
  if (size > 0) in.read(buf.data(), size);
  require(in.good(), errc::io_error, "read failed for " + path.string());
  return buf;
}

}  // namespace vlct
