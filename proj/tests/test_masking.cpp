#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "dipaint/error.hpp"
#include "dipaint/masking.hpp"
#include "png_oracle.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace dipaint;
using testing_support::blotchy;
using testing_support::flood_oracle;
using testing_support::box_mask;
using testing_support::make_png;
using testing_support::random_mask;
using testing_support::TempDir;

TEST(MaskByColor, ExactMatchAtZeroTolerance) {
  Image img(3, 2, 2, 0.0);
  img.at(0, 1, 1) = 1.0;
  const Mask m = mask_by_color(img, {{1.0, 0.0, 0.0}, 0.0});
  EXPECT_EQ(m.occluded_count(), 1u);
  EXPECT_TRUE(m.occluded(1, 1));
}

TEST(MaskByColor, ToleranceIsMeanAbsoluteDifference) {
  Image img(3, 1, 3, 0.0);
  img.at(0, 0, 1) = 0.3;  // mean distance 0.1
  img.at(0, 0, 2) = 0.6;  // mean distance 0.2
  const Mask m = mask_by_color(img, {{0.0, 0.0, 0.0}, 0.15});
  EXPECT_TRUE(m.occluded(0, 0));
  EXPECT_TRUE(m.occluded(0, 1));
  EXPECT_FALSE(m.occluded(0, 2));
}

TEST(MaskByColor, RejectsBadInputs) {
  const Image img(3, 2, 2);
  EXPECT_THROW(mask_by_color(img, {{0.0}, 0.1}), InvalidArgument);
  EXPECT_THROW(mask_by_color(img, {{0, 0, 0}, -1.0}), InvalidArgument);
}

TEST(RegionGrow, MatchesFloodOracleExhaustively) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Image img = blotchy(seed % 2 ? 3 : 1, 16, 16, seed, 3);
    for (double tol : {0.0, 0.2, 0.6}) {
      for (int r = 0; r < 16; ++r) {
        for (int x = 0; x < 16; ++x) {
          const std::vector<SeedPoint> s = {{r, x}};
          ASSERT_EQ(region_grow(img, s, tol).bits, flood_oracle(img, s, tol).bits)
              << "seed " << seed << " tol " << tol << " at " << r << "," << x;
        }
      }
    }
  }
}

TEST(RegionGrow, MultipleSeedsUnion) {
  const Image img = blotchy(3, 16, 16, 42, 4);
  const std::vector<SeedPoint> seeds = {{0, 0}, {15, 15}, {7, 3}};
  EXPECT_EQ(region_grow(img, seeds, 0.1).bits, flood_oracle(img, seeds, 0.1).bits);
}

TEST(RegionGrow, SeedAlwaysOccluded) {
  const Image img = testing_support::random_image(3, 8, 8, 3);
  const std::vector<SeedPoint> s = {{4, 5}};
  const Mask m = region_grow(img, s, 0.0);
  EXPECT_TRUE(m.occluded(4, 5));
}

TEST(RegionGrow, DiagonalDoesNotConnect) {
  Image img(1, 2, 2, 1.0);
  img.at(0, 0, 0) = 0.0;
  img.at(0, 1, 1) = 0.0;
  const std::vector<SeedPoint> s = {{0, 0}};
  EXPECT_EQ(region_grow(img, s, 0.0).occluded_count(), 1u);
}

TEST(RegionGrow, RejectsOutOfBoundsAndEmptySeeds) {
  const Image img(1, 4, 4);
  const std::vector<SeedPoint> bad = {{4, 0}};
  try {
    region_grow(img, bad, 0.1);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("(4, 0)"), std::string::npos);
  }
  EXPECT_THROW(region_grow(img, std::span<const SeedPoint>{}, 0.1), InvalidArgument);
}

TEST(Dilate, MatchesChebyshevBall) {
  const Mask m = random_mask(12, 13, 0.05, 9);
  for (int radius : {0, 1, 2}) {
    const Mask d = dilate(m, radius);
    for (int r = 0; r < 12; ++r) {
      for (int x = 0; x < 13; ++x) {
        bool expect = false;
        for (int dr = -radius; dr <= radius; ++dr) {
          for (int dx = -radius; dx <= radius; ++dx) {
            const int rr = r + dr;
            const int xx = x + dx;
            if (rr >= 0 && rr < 12 && xx >= 0 && xx < 13 && m.occluded(rr, xx)) expect = true;
          }
        }
        EXPECT_EQ(d.occluded(r, x), expect) << radius << " " << r << "," << x;
      }
    }
  }
  EXPECT_THROW(dilate(m, -1), InvalidArgument);
}

TEST(Combine, SetAlgebra) {
  const Mask a = random_mask(6, 6, 0.4, 1);
  const Mask b = random_mask(6, 6, 0.4, 2);
  const Mask u = combine(a, b, MaskOp::kUnion);
  const Mask i = combine(a, b, MaskOp::kIntersect);
  const Mask n = combine(a, b, MaskOp::kInvertA);
  for (int r = 0; r < 6; ++r) {
    for (int x = 0; x < 6; ++x) {
      EXPECT_EQ(u.occluded(r, x), a.occluded(r, x) || b.occluded(r, x));
      EXPECT_EQ(i.occluded(r, x), a.occluded(r, x) && b.occluded(r, x));
      EXPECT_EQ(n.occluded(r, x), !a.occluded(r, x));
    }
  }
  EXPECT_THROW(combine(a, Mask(5, 6), MaskOp::kUnion), InvalidArgument);
}

TEST(MaskPng, ThresholdAt128) {
  const Mask m = decode_mask_png(make_png(4, 1, 0, 8, {0, 127, 128, 255}));
  EXPECT_TRUE(m.occluded(0, 0));
  EXPECT_TRUE(m.occluded(0, 1));
  EXPECT_FALSE(m.occluded(0, 2));
  EXPECT_FALSE(m.occluded(0, 3));
}

TEST(MaskPng, RoundTripAndByteValues) {
  TempDir dir("mask");
  const Mask m = box_mask(5, 7, 1, 2, 2, 3);
  save_mask(m, dir / "m.png");
  EXPECT_EQ(load_mask(dir / "m.png").bits, m.bits);
  const Image raw = decode_png(encode_mask_png(m));
  ASSERT_EQ(raw.channels, 1);
  EXPECT_EQ(raw.at(0, 1, 2), 0.0);
  EXPECT_EQ(raw.at(0, 0, 0), 1.0);
}

TEST(MaskPng, MultiChannelMaskRejected) {
  EXPECT_THROW(decode_mask_png(make_png(1, 1, 2, 8, {0, 0, 0})), IoError);
}

TEST(ResizeMask, KeepsBlockShape) {
  const Mask m = box_mask(8, 8, 2, 2, 4, 4);
  const Mask up = resize_mask(m, 16, 16);
  EXPECT_EQ(up.occluded_count(), 64u);
  EXPECT_TRUE(up.occluded(4, 4));
  EXPECT_FALSE(up.occluded(3, 3));
}
