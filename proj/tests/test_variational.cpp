#include <gtest/gtest.h>

#include <cmath>

#include "dipaint/error.hpp"
#include "dipaint/variational.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace dipaint;
using testing_support::horizontal_ramp;
using testing_support::tv_direct;
using testing_support::box_mask;
using testing_support::random_image;
using testing_support::random_mask;

TEST(TvValue, MatchesDirectSummation) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Image u = random_image(seed % 2 ? 3 : 1, 5 + seed % 7, 4 + seed % 5, seed);
    EXPECT_NEAR(tv_value(u), tv_direct(u, 0.0), 1e-12);
    EXPECT_NEAR(tv_value_smoothed(u, 1e-3), tv_direct(u, 1e-3), 1e-12);
  }
}

TEST(TvValue, ConstantIsZeroAndLastRowColumnIgnored) {
  EXPECT_EQ(tv_value(Image(3, 6, 6, 0.4)), 0.0);
  Image u(1, 3, 3, 0.0);
  u.at(0, 2, 2) = 1.0;  // corner only ever appears as a "+1" neighbour of nothing
  EXPECT_EQ(tv_value(u), 0.0);
  u.at(0, 1, 2) = 1.0;  // right neighbour of (1,1): one unit jump
  EXPECT_DOUBLE_EQ(tv_value(u), 1.0);
}

TEST(TvValue, TooSmallRejected) {
  EXPECT_THROW(tv_value(Image(1, 1, 5)), InvalidArgument);
  EXPECT_THROW(tv_gradient(Image(1, 3, 3), 0.0), InvalidArgument);
}

TEST(TvGradient, CentralDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Image u = random_image(1, 16, 16, seed);
    const double eps = 0.05;
    const std::vector<double> g = tv_gradient(u, eps);
    double num = 0.0;
    double den = 0.0;
    const double h = 1e-6;
    for (std::size_t k = 0; k < u.data.size(); ++k) {
      const double orig = u.data[k];
      u.data[k] = orig + h;
      const double fp = tv_direct(u, eps);
      u.data[k] = orig - h;
      const double fm = tv_direct(u, eps);
      u.data[k] = orig;
      const double fd = (fp - fm) / (2 * h);
      num += (fd - g[k]) * (fd - g[k]);
      den += fd * fd + g[k] * g[k];
    }
    EXPECT_LT(std::sqrt(num / den), 1e-6) << "seed " << seed;
  }
}

TEST(TvSolve, EnergyMonotone2000Iterations) {
  const Image clean = random_image(3, 32, 32, 7);
  const Mask mask = random_mask(32, 32, 0.3, 8);
  const Image observed = apply_mask(clean, mask);
  TvSolveParams p;
  p.iterations = 2000;
  const TvTrace t = tv_inpaint_traced(observed, mask, p);
  ASSERT_GE(t.energy.size(), 2u);
  for (std::size_t i = 1; i < t.energy.size(); ++i) {
    ASSERT_LE(t.energy[i], t.energy[i - 1] + 1e-10) << "iteration " << i;
  }
  EXPECT_LT(t.energy.back(), t.energy.front());
}

TEST(TvSolve, FillsHoleInConstantImage) {
  const Image clean(3, 16, 16, 0.6);
  const Mask mask = box_mask(16, 16, 5, 5, 5, 5);
  const Image out = tv_inpaint(apply_mask(clean, mask), mask, TvSolveParams{});
  for (double v : out.data) EXPECT_NEAR(v, 0.6, 1e-6);
}

TEST(TvSolve, RejectsFullyOccludedAndBadParams) {
  const Image img(1, 4, 4);
  Mask all(4, 4, false);
  EXPECT_THROW(tv_inpaint(img, all, TvSolveParams{}), SolverError);
  TvSolveParams bad;
  bad.iterations = 0;
  EXPECT_THROW(tv_inpaint(img, Mask(4, 4), bad), InvalidArgument);
  EXPECT_THROW(tv_inpaint(img, Mask(3, 4), TvSolveParams{}), InvalidArgument);
}

TEST(NsSolve, ConstantImageFilledExactly) {
  const Image clean(3, 24, 24, 0.35);
  const Mask mask = box_mask(24, 24, 6, 8, 9, 7);
  const Image out = ns_inpaint(apply_mask(clean, mask), mask, NsSolveParams{});
  for (double v : out.data) EXPECT_NEAR(v, 0.35, 1e-6);
}

TEST(NsSolve, RampReconstructedWithinTolerance) {
  const Image clean = horizontal_ramp(32, 32);
  const Mask mask = box_mask(32, 32, 10, 10, 12, 12);
  const Image out = ns_inpaint(apply_mask(clean, mask), mask, NsSolveParams{});
  double mae = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) mae += std::abs(out.data[i] - clean.data[i]);
  mae /= static_cast<double>(mask.occluded_count());
  EXPECT_LT(mae, 0.02);
}

TEST(NsSolve, ReliablePixelsUntouched) {
  const Image clean = random_image(3, 16, 16, 4);
  const Mask mask = random_mask(16, 16, 0.2, 5);
  const Image observed = apply_mask(clean, mask);
  const Image out = ns_inpaint(observed, mask, NsSolveParams{});
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 16; ++r) {
      for (int x = 0; x < 16; ++x) {
        if (mask.reliable(r, x)) EXPECT_EQ(out.at(c, r, x), observed.at(c, r, x));
      }
    }
  }
}

TEST(NsSolve, RejectsBadParams) {
  NsSolveParams p;
  p.dt = 0.0;
  EXPECT_THROW(ns_inpaint(Image(1, 4, 4), Mask(4, 4), p), InvalidArgument);
  EXPECT_THROW(ns_inpaint(Image(1, 4, 4), Mask(4, 4, false), NsSolveParams{}), SolverError);
}
