#include <bit>
#include <cstring>
#include <fstream>

#include "dcrec/training.hpp"

namespace dcrec {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

constexpr char kMagic[8] = {'D', 'C', 'R', 'E', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("checkpoint truncated while reading " + what);
  return value;
}

void put_groups(std::ostream& out, const ParameterSet& params) {
  std::uint32_t count = 0;
  params.for_each([&count](const std::string&, const Matrix&) { ++count; });
  put(out, count);
  params.for_each([&out](const std::string& name, const Matrix& m) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(out, static_cast<std::int64_t>(m.rows()));
    put(out, static_cast<std::int64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  });
}

// Fills `skeleton` in place, checking names and shapes against the stream.
void get_groups(std::istream& in, ParameterSet& skeleton, const std::string& what) {
  std::uint32_t expected = 0;
  skeleton.for_each([&expected](const std::string&, Matrix&) { ++expected; });
  const auto count = get<std::uint32_t>(in, what + " group count");
  if (count != expected) {
    throw VersionError("checkpoint " + what + " has " + std::to_string(count) +
                       " parameter groups, model expects " + std::to_string(expected));
  }
  skeleton.for_each([&](const std::string& name, Matrix& m) {
    const auto len = get<std::uint32_t>(in, what + " name length");
    if (len > 4096) throw VersionError("checkpoint group name too long");
    std::string stored(len, '\0');
    in.read(stored.data(), len);
    if (!in) throw IoError("checkpoint truncated in group name");
    const auto rows = get<std::int64_t>(in, name + " rows");
    const auto cols = get<std::int64_t>(in, name + " cols");
    if (stored != name || rows != m.rows() || cols != m.cols()) {
      throw VersionError("checkpoint group '" + stored + "' (" + std::to_string(rows) + "x" +
                         std::to_string(cols) + ") does not match model group '" + name + "' (" +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
    }
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw IoError("checkpoint truncated in group " + name);
  });
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  const ModelShape& s = ckpt.shape;
  for (std::int32_t v : {s.users, s.items, s.dim, s.item_layers, s.social_layers,
                         s.projector_depth, static_cast<std::int32_t>(s.projector ? 1 : 0)}) {
    put(out, v);
  }
  put(out, static_cast<std::uint64_t>(ckpt.state.epoch));
  put(out, ckpt.seed);
  put_groups(out, ckpt.state.params);
  put(out, static_cast<std::int64_t>(ckpt.state.adam.step));
  put_groups(out, ckpt.state.adam.first_moment);
  put_groups(out, ckpt.state.adam.second_moment);
  if (!out) throw IoError("write failure on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw VersionError(path.string() + " is not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  ModelShape& s = ckpt.shape;
  s.users = get<std::int32_t>(in, "users");
  s.items = get<std::int32_t>(in, "items");
  s.dim = get<std::int32_t>(in, "dim");
  s.item_layers = get<std::int32_t>(in, "item_layers");
  s.social_layers = get<std::int32_t>(in, "social_layers");
  s.projector_depth = get<std::int32_t>(in, "projector_depth");
  s.projector = get<std::int32_t>(in, "projector") != 0;
  ckpt.state.epoch = get<std::uint64_t>(in, "epoch");
  ckpt.seed = get<std::uint64_t>(in, "seed");

  ckpt.state.params = init_parameters(s, 0);
  get_groups(in, ckpt.state.params, "parameters");
  ckpt.state.adam = AdamState::zeros_like(ckpt.state.params);
  ckpt.state.adam.step = get<std::int64_t>(in, "adam step");
  get_groups(in, ckpt.state.adam.first_moment, "first moments");
  get_groups(in, ckpt.state.adam.second_moment, "second moments");
  if (in.peek() != std::char_traits<char>::eof()) throw VersionError("trailing bytes in checkpoint");
  return ckpt;
}

}  // namespace dcrec
