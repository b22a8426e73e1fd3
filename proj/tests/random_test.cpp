#include "noisysde/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>

namespace noisysde {
namespace {

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox4x32, KnownAnswerVectors) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}),
            (Philox4x32Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}),
            (Philox4x32Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Philox4x32Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, IsAPureFunctionOfStreamAndIndex) {
  const CounterRng a(42), b(42), c(43);
  for (std::uint64_t i = 0; i < 100; ++i) {
    EXPECT_EQ(a.uniform(i), b.uniform(i));
    EXPECT_NE(a.uniform(i), c.uniform(i));
  }
  // Evaluation order does not matter.
  const double late = a.normal(999);
  for (std::uint64_t i = 0; i < 999; ++i) (void)a.normal(i);
  EXPECT_EQ(a.normal(999), late);
}

TEST(CounterRng, UniformStaysInOpenUnitInterval) {
  EXPECT_GT(CounterRng::to_open_unit(0, 0), 0.0);
  EXPECT_LT(CounterRng::to_open_unit(~0u, ~0u), 1.0);
  const CounterRng rng(7);
  double sum = 0.0;
  constexpr int kDraws = 200000;
  for (int i = 0; i < kDraws; ++i) {
    const double u = rng.uniform(static_cast<std::uint64_t>(i));
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // mean 1/2, sd of the mean sqrt(1/12 / N)
  EXPECT_NEAR(sum / kDraws, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / kDraws));
}

TEST(CounterRng, NormalMoments) {
  const CounterRng rng(11);
  constexpr int kDraws = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < kDraws; ++i) {
    const double z = rng.normal(static_cast<std::uint64_t>(i));
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= kDraws;
  m2 /= kDraws;
  m4 /= kDraws;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(kDraws));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / kDraws));
  EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / kDraws));
}

TEST(DeriveStream, SeparatesTags) {
  EXPECT_NE(derive_stream(1, 2), derive_stream(1, 3));
  EXPECT_NE(derive_stream(1, 2), derive_stream(2, 2));
  EXPECT_NE(derive_stream(1, 2, 3), derive_stream(1, 3, 2));
  EXPECT_EQ(derive_stream(5, 6, 7), derive_stream(derive_stream(5, 6), 7));
}

}  // namespace
}  // namespace noisysde
