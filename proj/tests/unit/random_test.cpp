#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "finlab/random.hpp"

using namespace finlab;

TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and substreams differ") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());

  const RandomStream root(42);
  RandomStream s1 = root.substream(1), s1b = root.substream(1), s2 = root.substream(2);
  RandomStream neg = root.site(-1), pos = root.site(1);
  int same12 = 0, same_sites = 0;
  for (int i = 0; i < 64; ++i) {
    const auto x = s1();
    CHECK(x == s1b());
    same12 += (x == s2());
    same_sites += (neg() == pos());
  }
  CHECK(same12 < 2);
  CHECK(same_sites < 2);
  RandomStream seed1 = RandomStream(1).substream(0), seed2 = RandomStream(2).substream(0);
  CHECK(seed1() != seed2());
}

TEST_CASE("substream paths do not collide on a small grid") {
  const RandomStream root(7);
  std::set<std::uint64_t> paths;
  for (std::uint64_t e = 0; e < 4; ++e)
    for (std::uint64_t r = 0; r < 200; ++r)
      for (std::uint64_t k = 0; k < 4; ++k) paths.insert(root.substream(e).substream(r).substream(k).path());
  CHECK(paths.size() == 4 * 200 * 4);
}

TEST_CASE("uniform, exponential, normal and poisson moments") {
  RandomStream rng(2024);
  const int n = 200000;
  double su = 0, se = 0, sn = 0, sn2 = 0, sp = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    se += rng.exponential();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sp += static_cast<double>(rng.poisson(3.5));
  }
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(se / n - 1.0) < 4 * std::sqrt(1.0 / n));
  CHECK(std::abs(sn / n) < 4 * std::sqrt(1.0 / n));
  CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
  CHECK(std::abs(sp / n - 3.5) < 4 * std::sqrt(3.5 / n));
}
