#include <doctest.h>

#include "bms/circuit.hpp"
#include "bms/sat.hpp"
#include "bms/tseitin.hpp"
#include "support.hpp"

using namespace bms;
using E = Circuit::Edge;

namespace {

E random_circuit(testing::Rng& rng, Circuit& c, std::uint32_t inputs, std::uint32_t gates) {
  std::vector<E> pool{Circuit::kFalse, Circuit::kTrue};
  for (std::uint32_t i = 0; i < inputs; ++i) pool.push_back(c.add_input());
  for (std::uint32_t g = 0; g < gates; ++g) {
    auto pick_edge = [&] {
      const auto e = pool[testing::pick(rng, static_cast<std::uint32_t>(pool.size()))];
      return testing::coin(rng) ? Circuit::negate(e) : e;
    };
    const auto a = pick_edge(), b = pick_edge();
    switch (testing::pick(rng, 4)) {
      case 0:
        pool.push_back(c.make_and(a, b));
        break;
      case 1:
        pool.push_back(c.make_xor(a, b));
        break;
      case 2:
        pool.push_back(c.make_or(a, b));
        break;
      default: {
        const E parts[] = {a, b, pick_edge()};
        pool.push_back(c.make_and(parts));
      }
    }
  }
  return pool.back();
}

std::vector<bool> assignment(std::uint32_t n, std::uint64_t bits) {
  std::vector<bool> v(n);
  for (std::uint32_t i = 0; i < n; ++i) v[i] = (bits >> i) & 1U;
  return v;
}

}  // namespace

TEST_CASE("constant folding and structural hashing") {
  Circuit c;
  const auto x = c.add_input(), y = c.add_input();
  CHECK(c.make_and(x, Circuit::kFalse) == Circuit::kFalse);
  CHECK(c.make_and(x, Circuit::kTrue) == x);
  CHECK(c.make_and(x, Circuit::negate(x)) == Circuit::kFalse);
  CHECK(c.make_xor(x, x) == Circuit::kFalse);
  CHECK(c.make_and(x, y) == c.make_and(y, x));
  const auto before = c.node_count();
  c.make_and(x, y);
  CHECK(c.node_count() == before);
}

TEST_CASE("one AND gate gives three definition clauses") {
  Circuit c;
  const auto x = c.add_input(), y = c.add_input();
  const auto r = tseitin(c, c.make_and(x, y));
  CHECK(r.cnf.num_vars == 3);
  CHECK(r.cnf.clauses.size() == 4);  // 3 definitions plus the root unit
  CHECK(r.cnf.clauses.back().size() == 1);
}

TEST_CASE("XOR gate gives four definition clauses") {
  Circuit c;
  const auto x = c.add_input(), y = c.add_input();
  const auto r = tseitin(c, c.make_xor(x, y));
  CHECK(r.cnf.clauses.size() == 5);
}

TEST_CASE("random circuits: Tseitin CNF agrees with the truth table") {
  testing::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    Circuit c;
    const auto n = 1 + testing::pick(rng, 8);
    const auto root = random_circuit(rng, c, n, 1 + testing::pick(rng, 25));
    bool any = false;
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << n); ++a) {
      const auto in = assignment(n, a);
      const bool v = c.eval(root, in);
      any |= v;
      // Pinning the inputs decides the CNF exactly as the circuit does.
      if (Circuit::is_const(root)) continue;
      auto r = tseitin(c, root);
      for (std::uint32_t k = 0; k < n; ++k) r.cnf.add({in[k] ? Lit(k + 1) : -Lit(k + 1)});
      CHECK(solve(r.cnf).is_sat() == v);
    }
    if (Circuit::is_const(root)) {
      CHECK(any == (root == Circuit::kTrue));
      continue;
    }
    const auto r = tseitin(c, root);
    const auto sat = solve(r.cnf);
    CHECK(sat.is_sat() == any);
    if (sat.is_sat()) {
      std::vector<bool> in(n);
      for (std::uint32_t k = 0; k < n; ++k) in[k] = sat.model[k + 1];
      CHECK(c.eval(root, in));
    }
  }
}

TEST_CASE("bit-parallel evaluation matches scalar evaluation") {
  testing::Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    Circuit c;
    const auto n = 1 + testing::pick(rng, 6);
    const auto root = random_circuit(rng, c, n, 20);
    std::vector<std::uint64_t> words(n, 0);
    for (std::uint64_t a = 0; a < 64; ++a) {
      for (std::uint32_t k = 0; k < n; ++k) words[k] |= ((a >> k) & 1U) << a;
    }
    const auto packed = testing::eval64(c, root, words);
    for (std::uint64_t a = 0; a < 64; ++a) CHECK(((packed >> a) & 1U) == c.eval(root, assignment(n, a)));
  }
}

TEST_CASE("copy_cone with constant inputs is partial evaluation") {
  testing::Rng rng(23);
  for (int i = 0; i < 50; ++i) {
    Circuit c;
    const auto n = 2 + testing::pick(rng, 5);
    const auto root = random_circuit(rng, c, n, 20);
    const auto a = rng() & ((std::uint64_t{1} << n) - 1);
    Circuit t;
    const auto keep = t.add_input();
    std::vector<E> map;
    for (std::uint32_t k = 0; k < n; ++k) map.push_back(k == 0 ? keep : (((a >> k) & 1U) ? Circuit::kTrue : Circuit::kFalse));
    const auto r = copy_cone(c, root, t, map);
    for (const bool x0 : {false, true}) {
      auto in = assignment(n, a);
      in[0] = x0;
      CHECK(t.eval(r, {x0}) == c.eval(root, in));
    }
  }
}

TEST_CASE("incremental encoder defines shared gates once") {
  Circuit c;
  const auto x = c.add_input(), y = c.add_input(), z = c.add_input();
  const auto xy = c.make_and(x, y);
  CnfFormula f;
  f.num_vars = 3;
  TseitinEncoder enc(c, f, {1, 2, 3});
  enc.assert_root(c.make_or(xy, z));
  const auto after_first = f.clauses.size();
  enc.assert_root(c.make_or(xy, Circuit::negate(z)));
  // Only the new OR gate and its unit are added.
  CHECK(f.clauses.size() - after_first == 4);
  const auto r = solve(f);
  REQUIRE(r.is_sat());
  CHECK((r.model[1] && r.model[2]));
}
