#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "geowealth/rng.hpp"

using namespace geowealth;

TEST_CASE("same seed, same stream") {
  Rng a(5), b(5), c(6);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("pinned first outputs") {
  // mt19937_64's sequence is fixed by the standard; this guards the seeding.
  Rng r(42);
  const auto first = r.next_u64();
  Rng again(42);
  CHECK(again.next_u64() == first);
  CHECK(mix_seed(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("split streams are independent of parent state") {
  Rng parent(9);
  const Rng s1 = parent.split(1);
  parent.next_u64();
  Rng s1b = parent.split(1);
  Rng s1c = s1;
  CHECK(s1b.next_u64() == s1c.next_u64());
  Rng s2 = parent.split(2);
  Rng s1d = parent.split(1);
  CHECK(s2.next_u64() != s1d.next_u64());
}

TEST_CASE("uniform, below, normal moments") {
  Rng r(1);
  const int n = 200000;
  double s = 0, s2 = 0, ns = 0, ns2 = 0;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    s += u;
    s2 += u * u;
    const double z = r.normal();
    ns += z;
    ns2 += z * z;
    ++counts[r.below(7)];
  }
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
  CHECK(std::abs(ns / n) < 0.01);
  CHECK(ns2 / n == doctest::Approx(1.0).epsilon(0.02));
  for (int c : counts) CHECK(std::abs(c - n / 7.0) < 5 * std::sqrt(n / 7.0));
}

TEST_CASE("shuffle is a permutation") {
  Rng r(3);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  r.shuffle(std::span<int>(v));
  CHECK_FALSE(std::is_sorted(v.begin(), v.end()));
  std::sort(v.begin(), v.end());
  for (int i = 0; i < 100; ++i) CHECK(v[i] == i);
}
