#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "spnmpc/errors.hpp"
#include "spnmpc/sharing.hpp"

using namespace spnmpc;

namespace {
const u128 kToyPrime = 1048583;
}

TEST_CASE("shamir worked example over GF(13)") {
  SharingParams params(3, 1, FieldParams(13));
  ScriptedRandom rng({3});  // the single polynomial coefficient
  auto shares = shamir_share(params.field.element(5), params, rng, "s");
  REQUIRE(shares.size() == 3);
  CHECK(shares[0].value.value() == 8);
  CHECK(shares[1].value.value() == 11);
  CHECK(shares[2].value.value() == 1);

  SUBCASE("overdetermined consistent reconstruction") {
    CHECK(lagrange_reconstruct(shares, params).value() == 5);
  }
  SUBCASE("every 2-subset reconstructs") {
    for (size_t i = 0; i < 3; ++i)
      for (size_t j = i + 1; j < 3; ++j) {
        std::vector<PolynomialShare> sub{shares[i], shares[j]};
        CHECK(lagrange_reconstruct(sub, params).value() == 5);
      }
  }
}

TEST_CASE("jrsz worked example, forced masks") {
  SharingParams params(3, 1, FieldParams(kToyPrime));
  ScriptedRandom rng({752508, 776879});
  auto z = jrsz_deal(params, rng, "r");
  REQUIRE(z.size() == 3);
  CHECK(z[0].value.value() == 752508);
  CHECK(z[1].value.value() == 776879);
  CHECK(z[2].value.value() == 567779);
  CHECK(reconstruct_additive(z, 3).value() == 0);
}

TEST_CASE("additive reconstruction of the worked shares") {
  FieldParams f(kToyPrime);
  std::vector<AdditiveShare> shares{
      {"F", PartyId{1}, f.element(752600)},
      {"F", PartyId{2}, f.element(776968)},
      {"F", PartyId{3}, f.element(567874)},
  };
  CHECK(reconstruct_additive(shares, 3).value() == 276);
}

TEST_CASE("sq2pq converts the worked additive shares") {
  SharingParams params(3, 1, FieldParams(kToyPrime));
  SeededRandom rng(11);
  std::vector<AdditiveShare> add{
      {"F", PartyId{1}, params.field.element(752600)},
      {"F", PartyId{2}, params.field.element(776968)},
      {"F", PartyId{3}, params.field.element(567874)},
  };
  // Party i spreads; party j combines column j.
  std::vector<std::vector<PolynomialShare>> spread;
  for (const auto& a : add) spread.push_back(sq2pq_spread(a, params, rng));
  std::vector<PolynomialShare> poly;
  for (uint16_t j = 0; j < 3; ++j) {
    std::vector<PolynomialShare> col{spread[0][j], spread[1][j], spread[2][j]};
    poly.push_back(sq2pq_combine(col, params));
  }
  CHECK(lagrange_reconstruct(poly, params).value() == 276);
}

TEST_CASE("round-trips for random secrets at several (n, t)") {
  struct Cfg { uint16_t n, t; };
  for (Cfg c : {Cfg{3, 1}, Cfg{5, 2}, Cfg{13, 6}}) {
    SharingParams params(c.n, c.t, FieldParams(kToyPrime));
    SeededRandom rng(c.n * 100 + c.t);
    int bad = 0;
    for (int i = 0; i < 300; ++i) {
      FieldElement x = sample_uniform(params.field, rng);
      auto poly = shamir_share(x, params, rng, "x");
      if (!(lagrange_reconstruct(poly, params) == x)) ++bad;
      // a minimal prefix subset also suffices
      std::vector<PolynomialShare> sub(poly.begin(),
                                       poly.begin() + params.t + 1);
      if (!(lagrange_reconstruct(sub, params) == x)) ++bad;
      auto add = additive_share(x, c.n, rng, "x");
      if (!(reconstruct_additive(add, c.n) == x)) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("sharing is additively homomorphic") {
  SharingParams params(5, 2, FieldParams(kToyPrime));
  SeededRandom rng(3);
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    FieldElement x = sample_uniform(params.field, rng);
    FieldElement y = sample_uniform(params.field, rng);
    auto sx = shamir_share(x, params, rng, "s");
    auto sy = shamir_share(y, params, rng, "s");
    std::vector<PolynomialShare> sum;
    for (size_t k = 0; k < sx.size(); ++k)
      sum.push_back({"s", sx[k].owner, sx[k].value + sy[k].value});
    if (!(lagrange_reconstruct(sum, params) == x + y)) ++bad;
    // public scalar
    std::vector<PolynomialShare> scaled;
    FieldElement c = params.field.element(777);
    for (const auto& s : sx) scaled.push_back({"s", s.owner, c * s.value});
    if (!(lagrange_reconstruct(scaled, params) == c * x)) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("single share positions look uniform (chi-square, alpha=0.001)") {
  SharingParams params(3, 1, FieldParams(kToyPrime));
  SeededRandom rng(99);
  FieldElement secret = params.field.element(123456);
  const int kRuns = 10000;
  for (uint16_t pos = 0; pos < 3; ++pos) {
    std::vector<uint64_t> buckets(16, 0);
    SeededRandom local(1000 + pos);
    for (int i = 0; i < kRuns; ++i) {
      auto add = additive_share(secret, 3, local, "x");
      u128 v = add[pos].value.value();
      ++buckets[static_cast<size_t>(v / ((kToyPrime + 15) / 16))];
    }
    double expected = kRuns / 16.0;
    double x = 0;
    for (uint64_t b : buckets) {
      double d = static_cast<double>(b) - expected;
      x += d * d / expected;
    }
    INFO("position " << pos << " chi-square " << x);
    CHECK(x < 37.697);
  }
}

TEST_CASE("independent jrsz invocations differ") {
  SharingParams params(3, 1, FieldParams(kToyPrime));
  SeededRandom rng(4242);
  int collisions = 0;
  for (int i = 0; i < 100; ++i) {
    auto a = jrsz_deal(params, rng, "r");
    auto b = jrsz_deal(params, rng, "r");
    bool same = true;
    for (size_t k = 0; k < a.size(); ++k)
      if (!(a[k].value == b[k].value)) same = false;
    if (same) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("parameter validation") {
  FieldParams f(kToyPrime);
  CHECK_THROWS_AS(SharingParams(3, 2, f), ConfigError);   // 2t+1 > n
  CHECK_THROWS_AS(SharingParams(2, 1, f), ConfigError);   // too few members
  CHECK_THROWS_AS(SharingParams(4, 0, f), ConfigError);   // degenerate t
  CHECK_NOTHROW((SharingParams{5, 2, f}));
  CHECK_THROWS_AS(SharingParams(5, 2, FieldParams(3)), ConfigError);
}

TEST_CASE("reconstruction input validation") {
  SharingParams params(3, 1, FieldParams(kToyPrime));
  SeededRandom rng(1);
  auto shares = shamir_share(params.field.element(5), params, rng, "s");
  SUBCASE("insufficient shares") {
    std::vector<PolynomialShare> one{shares[0]};
    CHECK_THROWS_AS(lagrange_reconstruct(one, params), ProtocolError);
  }
  SUBCASE("duplicate owner") {
    std::vector<PolynomialShare> dup{shares[0], shares[0]};
    CHECK_THROWS_AS(lagrange_reconstruct(dup, params), ProtocolError);
  }
  SUBCASE("additive share from a stranger") {
    auto add = additive_share(params.field.element(5), 3, rng, "x");
    add[1].owner = PartyId{7};
    CHECK_THROWS_AS(reconstruct_additive(add, 3), ProtocolError);
  }
  SUBCASE("additive count mismatch") {
    auto add = additive_share(params.field.element(5), 3, rng, "x");
    add.pop_back();
    CHECK_THROWS_AS(reconstruct_additive(add, 3), ProtocolError);
  }
}

TEST_CASE("share record wire format round-trips") {
  SeededRandom rng(8);
  for (int i = 0; i < 200; ++i) {
    std::string id = "w." + std::to_string(i) + "." + std::to_string(i * 7);
    u128 v = (static_cast<u128>(rng.next_u64()) << 64) | rng.next_u64();
    uint16_t owner = static_cast<uint16_t>(i % 13 + 1);
    auto bytes = encode_share(id, owner, v);
    size_t off = 0;
    auto rec = decode_share(bytes, off);
    CHECK(off == bytes.size());
    CHECK(rec.secret_id == id);
    CHECK(rec.owner == owner);
    CHECK(rec.value == v);
  }
  // truncation is detected
  auto bytes = encode_share("abc", 2, 77);
  bytes.pop_back();
  size_t off = 0;
  CHECK_THROWS_AS(decode_share(bytes, off), ParseError);
}
