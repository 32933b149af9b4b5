#include <doctest.h>

#include <set>

#include "bootdqn/rng.hpp"

using namespace bootdqn;

TEST_CASE("derived seeds are order sensitive and spread out") {
  CHECK(derive_seed({1, 2}) != derive_seed({2, 1}));
  CHECK(derive_seed({1, 2}) == derive_seed({1, 2}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 100; ++a)
    for (std::uint64_t b = 0; b < 10; ++b) seen.insert(derive_seed({a, b}));
  CHECK(seen.size() == 1000);
}

TEST_CASE("string hashing is stable and content sensitive") {
  CHECK(hash_string("boot_dqn N=10") == hash_string("boot_dqn N=10"));
  CHECK(hash_string("boot_dqn N=10") != hash_string("boot_dqn N=11"));
  CHECK(hash_string("") != hash_string(std::string_view("\0", 1)));
}

TEST_CASE("make_rng streams are reproducible") {
  Rng a = make_rng(5), b = make_rng(5), c = make_rng(6);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
}
