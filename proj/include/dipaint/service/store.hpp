#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/masking.hpp"
#include "dipaint/png_io.hpp"

namespace dipaint::service {

inline std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

inline std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Ids are used as file names, so only [A-Za-z0-9_-] is allowed.
inline bool valid_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

struct StoredImage {
  std::string id;
  Image image;
};

// On-disk layout under the data directory:
//   images/<sha256>.png         uploaded bytes, content addressed
//   masks/<id>.png              canonical mask PNG
//   masks/<id>.image            id of the image the mask is bound to
//   jobs/<id>/result.png        job output
//   jobs/<id>/checkpoint.bin    trained network (dip methods)
class Store {
 public:
  explicit Store(std::filesystem::path root) : root_(std::move(root)) {
    for (const char* sub : {"images", "masks", "jobs"}) {
      std::error_code ec;
      std::filesystem::create_directories(root_ / sub, ec);
      if (ec) throw IoError("cannot create " + (root_ / sub).string() + ": " + ec.message());
    }
  }

  const std::filesystem::path& root() const { return root_; }

  // Decodes first so that only valid PNGs are stored. Returns the id and
  // the decoded image; identical bytes map to the same file.
  StoredImage put_image(std::span<const std::uint8_t> bytes) {
    Image img = decode_png(bytes, "upload");
    const std::string id = sha256_hex(bytes);
    std::lock_guard lock(mu_);
    const auto path = image_path(id);
    if (!std::filesystem::exists(path)) write_atomic(path, bytes);
    return {id, std::move(img)};
  }

  std::optional<Image> get_image(const std::string& id) const {
    const auto bytes = image_bytes(id);
    if (!bytes) return std::nullopt;
    return decode_png(*bytes, "image " + id);
  }

  std::optional<std::vector<std::uint8_t>> image_bytes(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    std::lock_guard lock(mu_);
    return read_if_exists(image_path(id));
  }

  // Stores `mask` under `id`, bound to `image_id`. Replaces prior content.
  void put_mask(const std::string& id, const std::string& image_id, const Mask& mask) {
    if (!valid_id(id)) throw InvalidArgument("invalid mask id '" + id + "'");
    const auto png = encode_mask_png(mask);
    std::lock_guard lock(mu_);
    write_atomic(mask_path(id), png);
    write_atomic(mask_binding_path(id),
                 std::span<const std::uint8_t>(
                     reinterpret_cast<const std::uint8_t*>(image_id.data()), image_id.size()));
  }

  std::optional<std::vector<std::uint8_t>> mask_bytes(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    std::lock_guard lock(mu_);
    return read_if_exists(mask_path(id));
  }

  std::optional<Mask> get_mask(const std::string& id) const {
    const auto bytes = mask_bytes(id);
    if (!bytes) return std::nullopt;
    return decode_mask_png(*bytes, "mask " + id);
  }

  std::optional<std::string> mask_image(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    std::lock_guard lock(mu_);
    const auto b = read_if_exists(mask_binding_path(id));
    if (!b) return std::nullopt;
    return std::string(b->begin(), b->end());
  }

  std::filesystem::path job_dir(const std::string& job_id) const {
    return root_ / "jobs" / job_id;
  }

  static void write_atomic(const std::filesystem::path& path,
                           std::span<const std::uint8_t> bytes) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    const auto tmp = path.string() + ".tmp";
    png_detail::write_file(tmp, bytes);
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp + " into place: " + ec.message());
  }

 private:
  std::filesystem::path image_path(const std::string& id) const {
    return root_ / "images" / (id + ".png");
  }
  std::filesystem::path mask_path(const std::string& id) const {
    return root_ / "masks" / (id + ".png");
  }
  std::filesystem::path mask_binding_path(const std::string& id) const {
    return root_ / "masks" / (id + ".image");
  }

  static std::optional<std::vector<std::uint8_t>> read_if_exists(
      const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) return std::nullopt;
    return png_detail::read_file(p);
  }

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

}  // namespace dipaint::service
