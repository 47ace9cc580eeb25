#include <gtest/gtest.h>

#include <cmath>

#include "dipaint/error.hpp"
#include "gradient_suite.hpp"

using namespace dipaint;
using namespace testing_support;

namespace {

// Direct 3x3 cross-correlation with mirrored borders.
nn::Tensor naive_conv(const nn::Tensor& in, const nn::Tensor& k, const nn::Tensor& b,
                      int stride) {
  const int H = in.height();
  const int W = in.width();
  const int OH = (H + stride - 1) / stride;
  const int OW = (W + stride - 1) / stride;
  nn::Tensor out({k.dim(0), OH, OW});
  for (int o = 0; o < k.dim(0); ++o) {
    for (int y = 0; y < OH; ++y) {
      for (int x = 0; x < OW; ++x) {
        double acc = b.values[o];
        for (int i = 0; i < k.dim(1); ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int r = reflect_index(stride * y + ky - 1, H);
              const int c = reflect_index(stride * x + kx - 1, W);
              acc += k.values[((o * k.dim(1) + i) * 3 + ky) * 3 + kx] *
                     in.values[(i * H + r) * W + c];
            }
          }
        }
        out.values[(o * OH + y) * OW + x] = acc;
      }
    }
  }
  return out;
}

}  // namespace

TEST(Conv2d, MatchesNaiveOracle) {
  SplitMix64 rng(3);
  for (int stride : {1, 2}) {
    for (auto [h, w] : {std::pair{16, 16}, {7, 5}, {2, 3}}) {
      const nn::Tensor in = random_tensor({3, h, w}, rng);
      const nn::Tensor k = random_tensor({4, 3, 3, 3}, rng);
      const nn::Tensor b = random_tensor({4}, rng);
      const nn::Tensor got = nn::conv2d(in, k, b, stride);
      const nn::Tensor want = naive_conv(in, k, b, stride);
      ASSERT_EQ(got.shape, want.shape);
      for (std::size_t i = 0; i < got.values.size(); ++i) {
        EXPECT_NEAR(got.values[i], want.values[i], 1e-12);
      }
    }
  }
}

TEST(Conv2d, ShapeErrors) {
  const nn::Tensor in({2, 8, 8});
  EXPECT_THROW(nn::conv2d(in, nn::Tensor({3, 1, 3, 3}), nn::Tensor({3}), 1), InvalidArgument);
  EXPECT_THROW(nn::conv2d(in, nn::Tensor({3, 2, 3, 3}), nn::Tensor({2}), 1), InvalidArgument);
  EXPECT_THROW(nn::conv2d(in, nn::Tensor({3, 2, 3, 3}), nn::Tensor({3}), 3), InvalidArgument);
  EXPECT_THROW(nn::conv2d(nn::Tensor({2, 1, 8}), nn::Tensor({3, 2, 3, 3}), nn::Tensor({3}), 1),
               InvalidArgument);
}

TEST(Conv2d, InputGradientSkippedWhenUnallocated) {
  SplitMix64 rng(1);
  nn::Tensor in = random_tensor({2, 6, 6}, rng);
  in.grad.clear();
  nn::Tensor k = random_tensor({1, 2, 3, 3}, rng);
  nn::Tensor b({1});
  nn::Tensor out = nn::conv2d(in, k, b, 1);
  out.grad.assign(out.values.size(), 1.0);
  nn::conv2d_backward(in, k, b, 1, out);
  EXPECT_TRUE(in.grad.empty());
  EXPECT_DOUBLE_EQ(b.grad[0], 36.0);
}

TEST(Upsample, ConstantAndShape) {
  const nn::Tensor in({2, 3, 5}, 0.7);
  const nn::Tensor out = nn::upsample_bilinear2x(in);
  EXPECT_EQ(out.shape, (std::vector<int>{2, 6, 10}));
  for (double v : out.values) EXPECT_NEAR(v, 0.7, 1e-15);
}

TEST(Upsample, BackwardIsTranspose) {
  SplitMix64 rng(9);
  nn::Tensor x = random_tensor({2, 5, 4}, rng);
  nn::Tensor y = nn::upsample_bilinear2x(x);
  fill_uniform(y.grad, rng, -1.0, 1.0);
  // <U x, y> == <x, U^T y>
  double lhs = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) lhs += y.values[i] * y.grad[i];
  nn::upsample_bilinear2x_backward(x, y);
  double rhs = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) rhs += x.values[i] * x.grad[i];
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Activations, Values) {
  nn::Tensor in({1, 1, 3});
  in.values = {-2.0, 0.0, 3.0};
  const nn::Tensor lr = nn::leaky_relu(in, 0.2);
  EXPECT_DOUBLE_EQ(lr.values[0], -0.4);
  EXPECT_DOUBLE_EQ(lr.values[2], 3.0);
  const nn::Tensor s = nn::sigmoid(in);
  EXPECT_DOUBLE_EQ(s.values[1], 0.5);
  EXPECT_NEAR(s.values[0] + nn::sigmoid(nn::Tensor({1, 1, 1}, 2.0)).values[0], 1.0, 1e-15);
}

TEST(Concat, LayoutAndMismatch) {
  const nn::Tensor a({1, 2, 2}, 1.0);
  const nn::Tensor b({2, 2, 2}, 2.0);
  const nn::Tensor c = nn::concat_channels(a, b);
  EXPECT_EQ(c.channels(), 3);
  EXPECT_EQ(c.values[3], 1.0);
  EXPECT_EQ(c.values[4], 2.0);
  EXPECT_THROW(nn::concat_channels(a, nn::Tensor({1, 3, 2})), InvalidArgument);
}

TEST(Gram, SymmetricClosedForm) {
  nn::Tensor f({2, 1, 3});
  f.values = {1, 2, 3, 4, 5, 6};
  const nn::Gram g = nn::gram_matrix(f);
  EXPECT_EQ(g.at(0, 0), 14.0);
  EXPECT_EQ(g.at(0, 1), 32.0);
  EXPECT_EQ(g.at(1, 0), 32.0);
  EXPECT_EQ(g.at(1, 1), 77.0);
}

class LayerGradients : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(LayerGradients, CentralDifferences) {
  for (const auto& c : layer_suite(GetParam())) {
    EXPECT_LT(c.rel_error, c.tolerance) << c.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, LayerGradients, ::testing::Range<std::uint64_t>(1, 21));
