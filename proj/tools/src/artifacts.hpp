#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "dcrec/config.hpp"
#include "dcrec/data.hpp"

namespace dcrec::cli {

/// Bad invocation that CLI11 cannot see, such as a missing input file.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Files inside a prepared data directory.
inline constexpr const char* kSplitFile = "split.tsv";
inline constexpr const char* kSocialFile = "social.tsv";
inline constexpr const char* kDatasetInfoFile = "dataset.txt";

// Files inside a run directory.
inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kConfigFile = "config.txt";
inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kLogFile = "log.tsv";

/// 64-bit FNV-1a over the bytes of a file, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

/// "key = value" text, keys in sorted order; read back with read_settings_file.
void write_key_values(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& values);

struct PreparedDataset {
  std::filesystem::path dir;
  std::uint64_t split_seed = 0;
  std::string split_checksum;
  std::string social_checksum;
  Dataset dataset;
};

/// Loads the output of `prepare`.
PreparedDataset load_prepared(const std::filesystem::path& dir);

/// Root for new run directories: DCREC_OUTPUT_ROOT when set, else "runs".
std::filesystem::path output_root();

/// Creates `<root>/<UTC timestamp>-seed<seed>`, suffixing a counter on collision.
std::filesystem::path create_run_dir(const std::filesystem::path& root, std::uint64_t seed);

/// Everything needed to repeat a training run bit for bit.
struct RunManifest {
  std::string command;
  std::string code_version;
  std::uint64_t seed = 0;
  std::filesystem::path data_dir;
  std::string split_checksum;
  std::string social_checksum;
  std::filesystem::path output_dir;
  std::map<std::string, std::string> config;  // to_settings keys

  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

const char* code_version();

}  // namespace dcrec::cli
