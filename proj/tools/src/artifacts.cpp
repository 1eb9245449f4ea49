#include "artifacts.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>

#ifndef DCREC_VERSION
#define DCREC_VERSION "unknown"
#endif

namespace dcrec::cli {

namespace {

std::string require(const std::map<std::string, std::string>& values, const std::string& key,
                    const std::filesystem::path& source) {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigError(source.string() + ": missing key '" + key + "'");
  return it->second;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(what + ": expected an unsigned integer, got '" + text + "'");
  }
  return value;
}

}  // namespace

const char* code_version() { return DCREC_VERSION; }

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_key_values(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& values) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : values) out << k << " = " << v << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

PreparedDataset load_prepared(const std::filesystem::path& dir) {
  const auto info_path = dir / kDatasetInfoFile;
  const auto split_path = dir / kSplitFile;
  const auto social_path = dir / kSocialFile;
  for (const auto& p : {info_path, split_path, social_path}) {
    if (!std::filesystem::exists(p)) {
      throw UsageError("prepared data missing " + p.string() + " (run 'dcrec prepare' first)");
    }
  }
  const auto info = read_settings_file(info_path);
  PreparedDataset out;
  out.dir = dir;
  out.split_seed = parse_u64(require(info, "split_seed", info_path), "split_seed");
  out.split_checksum = file_checksum(split_path);
  out.social_checksum = file_checksum(social_path);
  PreparedData prepared = read_split_manifest(split_path, out.split_seed);
  EdgeSet social = read_social_edges(social_path, prepared.index);
  out.dataset = assemble_dataset(std::move(prepared.index), std::move(prepared.split), std::move(social));
  return out;
}

std::filesystem::path output_root() {
  const char* env = std::getenv("DCREC_OUTPUT_ROOT");
  if (env != nullptr && *env != '\0') return env;
  return "runs";
}

std::filesystem::path create_run_dir(const std::filesystem::path& root, std::uint64_t seed) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &utc);
  const std::string base = std::string(stamp) + "-seed" + std::to_string(seed);
  std::filesystem::create_directories(root);
  std::filesystem::path dir = root / base;
  for (int n = 2; std::filesystem::exists(dir); ++n) dir = root / (base + "-" + std::to_string(n));
  std::filesystem::create_directories(dir);
  return dir;
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::map<std::string, std::string> values{
      {"command", command},
      {"code_version", code_version},
      {"seed", std::to_string(seed)},
      {"data.dir", data_dir.string()},
      {"data.split_checksum", split_checksum},
      {"data.social_checksum", social_checksum},
      {"output.dir", output_dir.string()},
      {"output.checkpoint", (output_dir / kCheckpointFile).string()},
      {"output.log", (output_dir / kLogFile).string()},
  };
  for (const auto& [k, v] : config) values["config." + k] = v;
  write_key_values(path, values);
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  const auto values = read_settings_file(path);
  RunManifest m;
  m.command = require(values, "command", path);
  m.code_version = require(values, "code_version", path);
  m.seed = parse_u64(require(values, "seed", path), "seed");
  m.data_dir = require(values, "data.dir", path);
  m.split_checksum = require(values, "data.split_checksum", path);
  m.social_checksum = require(values, "data.social_checksum", path);
  m.output_dir = require(values, "output.dir", path);
  const std::string prefix = "config.";
  for (const auto& [k, v] : values) {
    if (k.rfind(prefix, 0) == 0) m.config[k.substr(prefix.size())] = v;
  }
  return m;
}

}  // namespace dcrec::cli
