#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/png_io.hpp"
#include "png_oracle.hpp"
#include "test_support.hpp"

using namespace dipaint;
using testing_support::make_png;
using testing_support::random_image;
using testing_support::TempDir;

TEST(Png, GrayFullScaleAndZero) {
  EXPECT_EQ(decode_png(make_png(1, 1, 0, 8, {255})).data[0], 1.0);
  const Image z = decode_png(make_png(1, 1, 0, 8, {0}));
  EXPECT_EQ(z.channels, 1);
  EXPECT_EQ(z.data[0], 0.0);
}

TEST(Png, Rgb128ScalesBy255) {
  const Image img = decode_png(make_png(2, 2, 2, 8, std::vector<std::uint8_t>(12, 128)));
  ASSERT_EQ(img.channels, 3);
  ASSERT_EQ(img.height, 2);
  ASSERT_EQ(img.width, 2);
  for (double v : img.data) EXPECT_EQ(v, 128.0 / 255.0);
}

TEST(Png, PlanarLayoutFromInterleaved) {
  // 1x2 RGB: (10, 20, 30), (40, 50, 60)
  const Image img = decode_png(make_png(2, 1, 2, 8, {10, 20, 30, 40, 50, 60}));
  EXPECT_EQ(img.at(0, 0, 0), 10 / 255.0);
  EXPECT_EQ(img.at(1, 0, 0), 20 / 255.0);
  EXPECT_EQ(img.at(2, 0, 1), 60 / 255.0);
}

TEST(Png, SixteenBitScaledBy65535) {
  const Image img = decode_png(make_png(1, 1, 0, 16, {0x80, 0x01}));
  EXPECT_DOUBLE_EQ(img.data[0], 0x8001 / 65535.0);
}

TEST(Png, AlphaIsDiscarded) {
  const Image img = decode_png(make_png(1, 1, 6, 8, {1, 2, 3, 0}));
  ASSERT_EQ(img.channels, 3);
  EXPECT_EQ(img.data[2], 3 / 255.0);
  const Image ga = decode_png(make_png(1, 1, 4, 8, {77, 9}));
  ASSERT_EQ(ga.channels, 1);
  EXPECT_EQ(ga.data[0], 77 / 255.0);
}

TEST(Png, PaletteExpandsToRgb) {
  const Image img = decode_png(make_png(2, 1, 3, 8, {1, 0}, {0, 0, 0, 255, 128, 0}));
  ASSERT_EQ(img.channels, 3);
  EXPECT_EQ(img.at(0, 0, 0), 1.0);
  EXPECT_EQ(img.at(1, 0, 0), 128 / 255.0);
  EXPECT_EQ(img.at(0, 0, 1), 0.0);
}

TEST(Png, CorruptBytesAreIoErrors) {
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_THROW(decode_png(junk), IoError);
  auto png = make_png(4, 4, 0, 8, std::vector<std::uint8_t>(16, 9));
  png.resize(png.size() - 20);
  EXPECT_THROW(decode_png(png), IoError);
}

TEST(Png, MissingFileNamesPath) {
  try {
    load_png("/nonexistent/dir/x.png");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/x.png"), std::string::npos);
  }
}

TEST(Png, SaveRoundTripAndByteRule) {
  TempDir dir("png");
  Image half(3, 5, 7, 0.5);
  save_png(half, dir / "half.png");
  for (double v : load_png(dir / "half.png").data) EXPECT_LE(std::abs(v - 0.5), 1.0 / 255.0);

  Image vals(1, 1, 3);
  vals.data = {1.0, 0.4, 0.0};
  const Image back = decode_png(encode_png(vals));
  EXPECT_EQ(std::lround(back.data[0] * 255), 255);
  EXPECT_EQ(std::lround(back.data[1] * 255), 102);
  EXPECT_EQ(std::lround(back.data[2] * 255), 0);

  const Image rnd = random_image(3, 9, 11, 3);
  const Image rt = decode_png(encode_png(rnd));
  for (std::size_t i = 0; i < rnd.data.size(); ++i) {
    EXPECT_LE(std::abs(rt.data[i] - rnd.data[i]), 0.5 / 255.0 + 1e-12);
  }
}

TEST(Png, UnwritablePathIsIoError) {
  EXPECT_THROW(save_png(Image(1, 1, 1), "/nonexistent/dir/out.png"), IoError);
}

TEST(Resize, ConstantStaysConstant) {
  const Image c(3, 7, 5, 0.3);
  for (auto [h, w] : {std::pair{14, 10}, {3, 2}, {1, 1}, {20, 7}}) {
    for (double v : resize_bilinear(c, h, w).data) EXPECT_NEAR(v, 0.3, 1e-15);
  }
}

TEST(Resize, SameSizeIsBitIdentical) {
  const Image a = random_image(3, 4, 4, 11);
  EXPECT_EQ(resize_bilinear(a, 4, 4), a);
}

TEST(Resize, HorizontalRampDoubledStaysLinear) {
  const int W = 16;
  Image ramp(1, 3, W);
  for (int r = 0; r < 3; ++r) {
    for (int x = 0; x < W; ++x) ramp.at(0, r, x) = x / 32.0;
  }
  const Image out = resize_bilinear(ramp, 3, 2 * W);
  // Half-pixel alignment: output d samples source (d + 0.5) / 2 - 0.5.
  for (int d = 1; d < 2 * W - 1; ++d) {
    const double src = (d + 0.5) / 2.0 - 0.5;
    EXPECT_NEAR(out.at(0, 1, d), src / 32.0, 1e-12) << d;
  }
}

TEST(Resize, ZeroTargetRejected) {
  EXPECT_THROW(resize_bilinear(Image(1, 2, 2), 0, 3), InvalidArgument);
  EXPECT_THROW(resize_bilinear(Image(1, 2, 2), 3, 0), InvalidArgument);
}

TEST(Resize, OutputStaysInUnitRange) {
  const Image a = random_image(3, 6, 9, 5);
  for (double v : resize_bilinear(a, 17, 4).data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Gray, PassThroughAndLuma) {
  const Image g = random_image(1, 3, 3, 2);
  EXPECT_EQ(to_gray(g), g);
  Image rgb(3, 1, 2);
  rgb.at(0, 0, 0) = 1.0;
  for (int c = 0; c < 3; ++c) rgb.at(c, 0, 1) = 0.37;
  const Image out = to_gray(rgb);
  EXPECT_DOUBLE_EQ(out.data[0], 0.299);
  EXPECT_NEAR(out.data[1], 0.37, 1e-15);
}

TEST(Irgb, ReplacesRedOnly) {
  Image ir(1, 2, 2, 0.25);
  Image rgb(3, 2, 2);
  for (int r = 0; r < 2; ++r) {
    for (int x = 0; x < 2; ++x) {
      rgb.at(0, r, x) = 0.9;
      rgb.at(1, r, x) = 0.5;
      rgb.at(2, r, x) = 0.75;
    }
  }
  const Image out = compose_irgb(ir, rgb);
  for (int r = 0; r < 2; ++r) {
    for (int x = 0; x < 2; ++x) {
      EXPECT_EQ(out.at(0, r, x), 0.25);
      EXPECT_EQ(out.at(1, r, x), 0.5);
      EXPECT_EQ(out.at(2, r, x), 0.75);
    }
  }
  EXPECT_EQ(extract_channel(out, 0), ir);
}

TEST(Irgb, ZeroIrAndIdentitySubstitution) {
  const Image rgb = random_image(3, 4, 5, 8);
  const Image zero = compose_irgb(Image(1, 4, 5, 0.0), rgb);
  for (double v : zero.plane(0)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(extract_channel(zero, 1), extract_channel(rgb, 1));
  EXPECT_EQ(compose_irgb(extract_channel(rgb, 0), rgb), rgb);
}

TEST(Irgb, SizeMismatchRejected) {
  EXPECT_THROW(compose_irgb(Image(1, 2, 3), Image(3, 3, 2)), InvalidArgument);
}

TEST(Reflect, MirrorsWithoutEdgeRepeat) {
  EXPECT_EQ(reflect_index(-1, 5), 1);
  EXPECT_EQ(reflect_index(5, 5), 3);
  EXPECT_EQ(reflect_index(-2, 5), 2);
  EXPECT_EQ(reflect_index(3, 1), 0);
}
