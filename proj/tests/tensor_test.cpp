#include <gtest/gtest.h>

#include "dare/error.hpp"
#include "dare/tensor.hpp"

using namespace dare;

TEST(Tensor, IndexOrderIsChannelMinor) {
  EXPECT_EQ(index_of(0, 0, 0, 4, 3), 0u);
  EXPECT_EQ(index_of(0, 0, 2, 4, 3), 2u);
  EXPECT_EQ(index_of(0, 1, 0, 4, 3), 3u);
  EXPECT_EQ(index_of(1, 0, 0, 4, 3), 12u);
  EXPECT_EQ(index_of(3, 3, 2, 4, 3), 47u);
}

TEST(Tensor, ConstructionChecksLength) {
  FeatureMap3 m(2, 3, 1.5);
  EXPECT_EQ(m.size(), 12u);
  EXPECT_EQ(m(1, 1, 2), 1.5);
  EXPECT_THROW(FeatureMap3(2, 3, std::vector<Scalar>(11)), Error);
  try {
    FeatureMap3(2, 3, std::vector<Scalar>(13));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Tensor, FlattenFollowsIndexOrder) {
  FeatureMap3 m(2, 2);
  Scalar v = 0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t c = 0; c < 2; ++c) m(i, j, c) = v++;
  const auto flat = m.flatten();
  for (std::size_t k = 0; k < flat.size(); ++k) EXPECT_EQ(flat[k], static_cast<Scalar>(k));
  EXPECT_EQ(FeatureMap3::from_vector(flat, 2, 2), m);
}

TEST(Tensor, ZeroPadSurroundsWithZeros) {
  FeatureMap3 m(1, 2, 3.0);
  const FeatureMap3 p = zero_pad(m, 1);
  EXPECT_EQ(p.side(), 3u);
  EXPECT_EQ(p(1, 1, 0), 3.0);
  EXPECT_EQ(p(1, 1, 1), 3.0);
  EXPECT_EQ(p(0, 0, 0), 0.0);
  EXPECT_EQ(p(2, 1, 1), 0.0);
  EXPECT_EQ(zero_pad(m, 0), m);
}

TEST(Tensor, FiniteCheck) {
  FeatureMap3 m(2, 1, 0.0);
  EXPECT_TRUE(m.all_finite());
  m(0, 1, 0) = std::numeric_limits<Scalar>::quiet_NaN();
  EXPECT_FALSE(m.all_finite());
}
