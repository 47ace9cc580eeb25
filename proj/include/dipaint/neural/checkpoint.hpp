#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/neural/network.hpp"

namespace dipaint::nn {

// Little-endian layout, see docs/checkpoint.md:
//   "DIPCKPT\0"  8 bytes magic
//   u8           version (1)
//   u32          levels
//   u32          z_channels
//   u32          out_channels
//   u8           use_sigmoid_output
//   f64          leaky_slope
//   u32[levels]  channels_per_level
//   u32[levels]  skip_channels_per_level
//   u64          parameter count N
//   f64[N]       parameters, tensors in storage order
inline constexpr char kCheckpointMagic[8] = {'D', 'I', 'P', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

namespace ckpt_detail {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw IoError("checkpoint is truncated");
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(std::begin(raw), std::end(raw));
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError("checkpoint is truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace ckpt_detail

struct Checkpoint {
  NetConfig config;
  NetParams params;
};

inline std::vector<std::uint8_t> encode_checkpoint(const NetConfig& config,
                                                   const NetParams& params) {
  validate(config);
  const auto shapes = param_shapes(config);
  if (shapes.size() != params.tensors.size()) {
    throw InvalidArgument("parameters do not match the network configuration");
  }
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  using ckpt_detail::put;
  put<std::uint8_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config.levels));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config.z_channels));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config.out_channels));
  put<std::uint8_t>(out, config.use_sigmoid_output ? 1 : 0);
  put<double>(out, config.leaky_slope);
  for (int c : config.channels_per_level) put<std::uint32_t>(out, static_cast<std::uint32_t>(c));
  for (int s : config.skip_channels_per_level) put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  put<std::uint64_t>(out, params.count());
  for (const auto& t : params.tensors) {
    for (double v : t.values) put<double>(out, v);
  }
  return out;
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ckpt_detail::Reader in(bytes);
  const auto magic = in.take(sizeof(kCheckpointMagic));
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IoError("not a checkpoint (bad magic)");
  }
  const auto version = in.get<std::uint8_t>();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  NetConfig& c = ck.config;
  c.levels = static_cast<int>(in.get<std::uint32_t>());
  if (c.levels < 1 || c.levels > 16) throw IoError("checkpoint has invalid level count");
  c.z_channels = static_cast<int>(in.get<std::uint32_t>());
  c.out_channels = static_cast<int>(in.get<std::uint32_t>());
  c.use_sigmoid_output = in.get<std::uint8_t>() != 0;
  c.leaky_slope = in.get<double>();
  c.channels_per_level.resize(static_cast<std::size_t>(c.levels));
  c.skip_channels_per_level.resize(static_cast<std::size_t>(c.levels));
  for (int& v : c.channels_per_level) v = static_cast<int>(in.get<std::uint32_t>());
  for (int& v : c.skip_channels_per_level) v = static_cast<int>(in.get<std::uint32_t>());
  try {
    validate(c);
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("checkpoint configuration is invalid: ") + e.what());
  }
  const auto count = in.get<std::uint64_t>();
  ck.params = zero_params(c);
  if (count != ck.params.count()) {
    throw IoError("checkpoint parameter count " + std::to_string(count) +
                  " does not match its configuration (" +
                  std::to_string(ck.params.count()) + ")");
  }
  for (auto& t : ck.params.tensors) {
    for (double& v : t.values) v = in.get<double>();
  }
  if (!in.done()) throw IoError("trailing bytes after checkpoint payload");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path,
                            const NetConfig& config, const NetParams& params) {
  const auto bytes = encode_checkpoint(config, params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace dipaint::nn
