#include <gtest/gtest.h>

#include <random>

#include "speedup/sparse_vector.hpp"

using speedup::SparseVector;

TEST(SparseVector, DropsExplicitZeros) {
  SparseVector v{{3, 1.0}, {1, 2.0}};
  v.add(3, -1.0);
  EXPECT_EQ(v.nnz(), 1u);
  EXPECT_EQ(v, (SparseVector{{1, 2.0}}));
  v.set(1, 0.0);
  EXPECT_TRUE(v.empty());
}

TEST(SparseVector, ArithmeticMatchesDense) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> id(0, 15);
  std::uniform_int_distribution<int> val(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> da(16, 0.0), db(16, 0.0);
    SparseVector a, b;
    for (int n = 0; n < 6; ++n) {
      const int i = id(rng);
      const double x = val(rng);
      a.add(static_cast<speedup::FeatureId>(i), x);
      da[static_cast<std::size_t>(i)] += x;
      const int j = id(rng);
      const double y = val(rng);
      b.add(static_cast<speedup::FeatureId>(j), y);
      db[static_cast<std::size_t>(j)] += y;
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < 16; ++i) dot += da[i] * db[i];
    EXPECT_DOUBLE_EQ(a.dot(b), dot);
    const SparseVector diff = a - b;
    for (std::size_t i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(diff.get(static_cast<speedup::FeatureId>(i)), da[i] - db[i]);
    SparseVector c = a;
    c.axpy(0.5, b);
    for (std::size_t i = 0; i < 16; ++i) {
      EXPECT_DOUBLE_EQ(c.get(static_cast<speedup::FeatureId>(i)), da[i] + 0.5 * db[i]);
    }
  }
}

TEST(SparseVector, Norm) {
  const SparseVector v{{0, 3.0}, {7, 4.0}};
  EXPECT_DOUBLE_EQ(v.squared_norm(), 25.0);
  EXPECT_DOUBLE_EQ(v.norm(), 5.0);
}
