#pragma once

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"

namespace dipaint {

namespace png_detail {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

inline void read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + n > cur->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->bytes.data() + cur->pos, n);
  cur->pos += n;
}

inline void write_to_vector(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

inline void flush_noop(png_structp) {}

// libpng reports errors through longjmp; the message is stashed here so it
// can be rethrown once control is back in C++ land.
struct ErrorSink {
  char message[256] = "unknown libpng error";
};

inline void on_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  png_longjmp(png, 1);
}

inline void on_warning(png_structp, png_const_charp) {}

struct Decoded {
  int channels = 0;
  int height = 0;
  int width = 0;
  int bit_depth = 0;
  bool had_alpha = false;
  int color_type = 0;
  std::vector<std::uint8_t> rows;  // packed, big-endian for 16-bit
};

// Returns false (with `err` filled) when libpng rejects the stream.
inline bool decode(std::span<const std::uint8_t> bytes, Decoded& out,
                   std::string& err) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    err = "not a PNG stream";
    return false;
  }
  ErrorSink sink;
  ReadCursor cursor{bytes, 0};
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, on_error, on_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    err = "out of memory";
    return false;
  }
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    err = sink.message;
    return false;
  }
  png_set_read_fn(png, &cursor, read_from_memory);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  out.color_type = color;
  out.had_alpha = (color & PNG_COLOR_MASK_ALPHA) != 0 ||
                  png_get_valid(png, info, PNG_INFO_tRNS) != 0;

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  out.bit_depth = depth;
  const std::size_t stride = png_get_rowbytes(png, info);
  out.rows.assign(stride * static_cast<std::size_t>(out.height), 0);
  row_ptrs.resize(static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r) {
    row_ptrs[r] = out.rows.data() + stride * r;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace png_detail

// Decodes a gray or RGB PNG (8 or 16 bit). Alpha is dropped, palette
// images are expanded to RGB. `source` names the stream in error messages.
inline Image decode_png(std::span<const std::uint8_t> bytes,
                        const std::string& source = "<memory>") {
  png_detail::Decoded dec;
  std::string err;
  if (!png_detail::decode(bytes, dec, err)) {
    throw IoError("cannot decode PNG " + source + ": " + err);
  }
  if (dec.channels != 1 && dec.channels != 3) {
    throw IoError("unsupported PNG color type in " + source + " (" +
                  std::to_string(dec.channels) + " channels)");
  }
  Image img(dec.channels, dec.height, dec.width);
  const int C = dec.channels;
  const std::size_t plane = img.plane_size();
  if (dec.bit_depth == 16) {
    for (std::size_t p = 0; p < plane; ++p) {
      for (int c = 0; c < C; ++c) {
        const std::size_t off = (p * C + c) * 2;
        const unsigned v = (unsigned{dec.rows[off]} << 8) | dec.rows[off + 1];
        img.data[c * plane + p] = v / 65535.0;
      }
    }
  } else {
    for (std::size_t p = 0; p < plane; ++p) {
      for (int c = 0; c < C; ++c) {
        img.data[c * plane + p] = dec.rows[p * C + c] / 255.0;
      }
    }
  }
  return img;
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Always 8-bit; v is stored as round(v * 255).
inline std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw InvalidArgument("only 1- or 3-channel images can be written as PNG");
  }
  const int C = image.channels;
  const std::size_t plane = image.plane_size();
  std::vector<std::uint8_t> pixels(plane * C);
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < C; ++c) {
      pixels[p * C + c] = to_byte(image.data[c * plane + p]);
    }
  }

  std::vector<std::uint8_t> out;
  png_detail::ErrorSink sink;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink,
                                            png_detail::on_error,
                                            png_detail::on_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot allocate PNG encoder");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  for (int r = 0; r < image.height; ++r) {
    rows[r] = pixels.data() + static_cast<std::size_t>(r) * image.width * C;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(std::string("PNG encode failed: ") + sink.message);
  }
  png_set_write_fn(png, &out, png_detail::write_to_vector,
                   png_detail::flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8,
               C == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline Image load_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path.string());
  }
  const auto bytes = png_detail::read_file(path);
  return decode_png(bytes, path.string());
}

inline void save_png(const Image& image, const std::filesystem::path& path) {
  png_detail::write_file(path, encode_png(image));
}

}  // namespace dipaint
