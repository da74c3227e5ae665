#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "spnmpc/errors.hpp"
#include "spnmpc/random.hpp"
#include "spnmpc/spn.hpp"
#include "spnmpc/spn_io.hpp"
#include "support/random_spn.hpp"

using namespace spnmpc;

namespace {

// The two-variable demo network: four indicator leaves shared by four
// bottom sums, three products, one root sum. Weights scaled by 1000.
SpnGraph build_demo_network() {
  SpnGraph g;
  g.num_vars = 2;
  g.scale = 1000;
  g.nodes.resize(12);
  auto leaf = [&](uint32_t id, uint32_t var, bool neg) {
    g.nodes[id].kind = NodeKind::Leaf;
    g.nodes[id].var = var;
    g.nodes[id].negated = neg;
  };
  auto sum2 = [&](uint32_t id, uint32_t c0, uint64_t w0, uint32_t c1,
                  uint64_t w1) {
    g.nodes[id].kind = NodeKind::Sum;
    g.nodes[id].edges = {{c0, w0}, {c1, w1}};
  };
  leaf(0, 0, false);
  leaf(1, 0, true);
  leaf(2, 1, false);
  leaf(3, 1, true);
  sum2(4, 0, 300, 1, 700);
  sum2(5, 0, 600, 1, 400);
  sum2(6, 2, 200, 3, 800);
  sum2(7, 2, 100, 3, 900);
  g.nodes[8].kind = NodeKind::Product;
  g.nodes[8].children = {4, 6};
  g.nodes[9].kind = NodeKind::Product;
  g.nodes[9].children = {4, 7};
  g.nodes[10].kind = NodeKind::Product;
  g.nodes[10].children = {5, 7};
  g.nodes[11].kind = NodeKind::Sum;
  g.nodes[11].edges = {{8, 400}, {9, 500}, {10, 100}};
  g.root = 11;
  compute_scopes(g);
  return g;
}

// Single sum node over one indicator pair, the smallest learnable network.
SpnGraph build_pair_sum(uint64_t w_pos, uint64_t w_neg, uint64_t scale) {
  SpnGraph g;
  g.num_vars = 1;
  g.scale = scale;
  g.nodes.resize(3);
  g.nodes[0].kind = NodeKind::Leaf;
  g.nodes[0].var = 0;
  g.nodes[1].kind = NodeKind::Leaf;
  g.nodes[1].var = 0;
  g.nodes[1].negated = true;
  g.nodes[2].kind = NodeKind::Sum;
  g.nodes[2].edges = {{0, w_pos}, {1, w_neg}};
  g.root = 2;
  compute_scopes(g);
  return g;
}

Dataset rows_of(std::vector<std::vector<uint8_t>> rows, uint32_t vars) {
  Dataset d;
  d.num_vars = vars;
  d.rows = std::move(rows);
  return d;
}

bool has_violation(const std::vector<Violation>& v, uint32_t node,
                   const char* needle) {
  for (const Violation& x : v) {
    if (x.node == node && x.message.find(needle) != std::string::npos) {
      return true;
    }
  }
  return false;
}

// Value of one child subnetwork under a row, computed through the public
// evaluator by re-rooting a copy. Slower than positive_nodes but entirely
// independent of it.
double child_value(const SpnGraph& g, uint32_t child,
                   const std::vector<uint8_t>& row) {
  SpnGraph copy = g;
  copy.root = child;
  return evaluate(copy, leaf_values_for_row(copy, row));
}

std::string temp_path(const char* name) {
  return std::string("/tmp/spn_io_test_") + name;
}

}  // namespace

TEST_CASE("demo network validates cleanly") {
  SpnGraph g = build_demo_network();
  CHECK(validate(g).empty());
  StructureStats s = structure_stats(g);
  CHECK(s.sums == 5);
  CHECK(s.products == 3);
  CHECK(s.leaves == 4);
  CHECK(s.edges == 17);
  CHECK(s.sum_edges == 11);
  CHECK(s.depth == 3);
}

TEST_CASE("decomposability violation is reported") {
  SpnGraph g;
  g.num_vars = 1;
  g.scale = 256;
  g.nodes.resize(3);
  g.nodes[0].kind = NodeKind::Leaf;
  g.nodes[0].var = 0;
  g.nodes[1].kind = NodeKind::Leaf;
  g.nodes[1].var = 0;
  g.nodes[2].kind = NodeKind::Product;
  g.nodes[2].children = {0, 1};
  g.root = 2;
  CHECK(has_violation(validate(g), 2, "decomposability"));
}

TEST_CASE("completeness violation is reported") {
  SpnGraph g;
  g.num_vars = 2;
  g.scale = 256;
  g.nodes.resize(3);
  g.nodes[0].kind = NodeKind::Leaf;
  g.nodes[0].var = 0;
  g.nodes[1].kind = NodeKind::Leaf;
  g.nodes[1].var = 1;
  g.nodes[2].kind = NodeKind::Sum;
  g.nodes[2].edges = {{0, 128}, {1, 128}};
  g.root = 2;
  CHECK(has_violation(validate(g), 2, "completeness"));
}

TEST_CASE("weight problems are reported") {
  SpnGraph bad_total = build_pair_sum(100, 100, 256);
  CHECK(has_violation(validate(bad_total), 2, "weights total"));

  SpnGraph zero = build_pair_sum(256, 0, 256);
  CHECK(has_violation(validate(zero), 2, "zero weight"));

  // A one-unit rounding shortfall stays within the allowed slack.
  SpnGraph close = build_pair_sum(170, 85, 256);
  CHECK(!has_violation(validate(close), 2, "weights total"));
}

TEST_CASE("unreachable and structural defects are reported") {
  SpnGraph g = build_demo_network();
  SpnNode orphan;
  orphan.kind = NodeKind::Leaf;
  orphan.var = 0;
  g.nodes.push_back(orphan);
  CHECK(has_violation(validate(g), 12, "unreachable"));

  SpnGraph cyc;
  cyc.num_vars = 1;
  cyc.scale = 256;
  cyc.nodes.resize(2);
  cyc.nodes[0].kind = NodeKind::Product;
  cyc.nodes[0].children = {1};
  cyc.nodes[1].kind = NodeKind::Product;
  cyc.nodes[1].children = {0};
  cyc.root = 0;
  auto v = validate(cyc);
  REQUIRE(!v.empty());
  CHECK(v[0].message.find("cycle") != std::string::npos);

  SpnGraph oob = build_pair_sum(128, 128, 256);
  oob.nodes[2].edges[0].child = 99;
  CHECK(has_violation(validate(oob), 2, "out of range"));
}

TEST_CASE("selectivity holds for an indicator pair and fails at the demo root") {
  SpnGraph pair = build_pair_sum(128, 128, 256);
  Dataset all = rows_of({{0}, {1}, {1}, {0}}, 1);
  CHECK(check_selectivity(pair, all).empty());

  SpnGraph g = build_demo_network();
  Dataset one = rows_of({{1, 1}}, 2);
  auto bad = check_selectivity(g, one);
  REQUIRE(!bad.empty());
  bool root_flagged = false;
  for (const auto& x : bad) root_flagged |= (x.node == 11 && x.row == 0);
  CHECK(root_flagged);

  Dataset empty = rows_of({}, 2);
  CHECK(check_selectivity(g, empty).empty());
}

TEST_CASE("demo network evaluation") {
  SpnGraph g = build_demo_network();
  double both = evaluate(g, leaf_values_for_row(g, {1, 1}));
  CHECK(both == doctest::Approx(0.045).epsilon(1e-12));

  double all = evaluate(g, leaf_values_all_ones(g));
  CHECK(all == doctest::Approx(1.0).epsilon(1e-12));

  LeafValues lv = leaf_values_all_ones(g);
  lv.pos[0] = 1.0;
  lv.neg[0] = 0.0;  // X1 fixed true, X2 marginalized
  CHECK(evaluate(g, lv) == doctest::Approx(0.33).epsilon(1e-12));
}

TEST_CASE("evaluation is linear in every leaf slot") {
  SeededRandom rng(2024);
  for (int rep = 0; rep < 5; ++rep) {
    SpnGraph g = testsupport::random_selective_spn(4, 256, rng);
    LeafValues base = leaf_values_all_ones(g);
    for (uint32_t v = 0; v < g.num_vars; ++v) {
      base.pos[v] = static_cast<double>(sample_bounded(1000, rng)) / 500.0;
      base.neg[v] = static_cast<double>(sample_bounded(1000, rng)) / 500.0;
    }
    for (uint32_t v = 0; v < g.num_vars; ++v) {
      for (int pol = 0; pol < 2; ++pol) {
        double a = static_cast<double>(sample_bounded(1000, rng)) / 500.0;
        double b = static_cast<double>(sample_bounded(1000, rng)) / 500.0;
        auto with = [&](double x) {
          LeafValues lv = base;
          (pol ? lv.neg : lv.pos)[v] = x;
          return evaluate(g, lv);
        };
        // Degree at most one in every slot: the affine identity holds.
        CHECK(with(a + b) - with(a) - with(b) + with(0.0) ==
              doctest::Approx(0.0).epsilon(1e-9));
        // With the complementary indicator at zero, completeness removes
        // the constant term and evaluation becomes strictly additive.
        auto with_comp_zero = [&](double x) {
          LeafValues lv = base;
          (pol ? lv.neg : lv.pos)[v] = x;
          (pol ? lv.pos : lv.neg)[v] = 0.0;
          return evaluate(g, lv);
        };
        CHECK(with_comp_zero(a + b) ==
              doctest::Approx(with_comp_zero(a) + with_comp_zero(b))
                  .epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("contribution counts on the single pair") {
  SpnGraph pair = build_pair_sum(128, 128, 256);

  EdgeCounts c = count_contributions(pair, rows_of({{1}, {1}, {0}}, 1));
  CHECK(c.counts[2] == std::vector<uint64_t>{2, 1});

  EdgeCounts empty = count_contributions(pair, rows_of({}, 1));
  CHECK(empty.counts[2] == std::vector<uint64_t>{0, 0});

  EdgeCounts same =
      count_contributions(pair, rows_of({{1}, {1}, {1}, {1}, {1}}, 1));
  CHECK(same.counts[2] == std::vector<uint64_t>{5, 0});
}

TEST_CASE("counting refuses non-selective data") {
  SpnGraph g = build_demo_network();
  CHECK_THROWS_AS(count_contributions(g, rows_of({{1, 1}}, 2)), DomainError);
}

TEST_CASE("counts match a per-row evaluation oracle") {
  SpnGraph pair = build_pair_sum(128, 128, 256);
  SeededRandom rng(77);

  auto oracle_check = [&](const SpnGraph& g, const Dataset& data) {
    EdgeCounts got = count_contributions(g, data);
    for (uint32_t i = 0; i < g.nodes.size(); ++i) {
      if (g.nodes[i].kind != NodeKind::Sum) continue;
      for (size_t k = 0; k < g.nodes[i].edges.size(); ++k) {
        uint64_t expect = 0;
        for (const auto& row : data.rows) {
          if (child_value(g, g.nodes[i].edges[k].child, row) > 0.0) ++expect;
        }
        CHECK(got.counts[i][k] == expect);
      }
    }
  };

  // Exhaustive over every 1-variable dataset with up to 4 rows.
  for (int len = 0; len <= 4; ++len) {
    for (int bits = 0; bits < (1 << len); ++bits) {
      Dataset data;
      data.num_vars = 1;
      for (int r = 0; r < len; ++r) {
        data.rows.push_back({static_cast<uint8_t>((bits >> r) & 1)});
      }
      oracle_check(pair, data);
    }
  }

  // Random selective structures against the same oracle.
  for (int rep = 0; rep < 20; ++rep) {
    SpnGraph g = testsupport::random_selective_spn(3, 256, rng);
    oracle_check(g, testsupport::random_dataset(3, 16, rng));
  }
}

TEST_CASE("largest remainder rounding") {
  CHECK(round_weights_largest_remainder({2, 1}, 3, 256) ==
        std::vector<uint64_t>{171, 85});
  CHECK(round_weights_largest_remainder({5, 0}, 5, 256) ==
        std::vector<uint64_t>{256, 0});
  CHECK(round_weights_largest_remainder({1, 1}, 2, 256) ==
        std::vector<uint64_t>{128, 128});
  // Equal remainders break ties toward the lower index.
  CHECK(round_weights_largest_remainder({1, 1, 1}, 3, 256) ==
        std::vector<uint64_t>{86, 85, 85});

  SeededRandom rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    size_t k = 2 + static_cast<size_t>(sample_bounded(4, rng));
    std::vector<uint64_t> counts(k);
    uint64_t den = 0;
    for (uint64_t& c : counts) {
      c = static_cast<uint64_t>(sample_bounded(100, rng));
      den += c;
    }
    if (den == 0) continue;
    std::vector<uint64_t> w = round_weights_largest_remainder(counts, den, 256);
    uint64_t total = 0;
    for (uint64_t x : w) total += x;
    CHECK(total == 256);
  }
}

TEST_CASE("closed form learning on the single pair") {
  SpnGraph pair = build_pair_sum(128, 128, 256);

  SpnGraph m = oracle_learn(pair, rows_of({{1}, {1}, {0}}, 1), 256);
  CHECK(m.nodes[2].edges[0].weight == 171);
  CHECK(m.nodes[2].edges[1].weight == 85);

  // All-positive data: the raw ratio is (256, 0); the zero floor lifts the
  // losing edge to 1.
  Dataset five = rows_of({{1}, {1}, {1}, {1}, {1}}, 1);
  SpnGraph floored = oracle_learn(pair, five, 256);
  CHECK(floored.nodes[2].edges[0].weight == 255);
  CHECK(floored.nodes[2].edges[1].weight == 1);

  LearnOptions raw;
  raw.zero_floor = false;
  SpnGraph unfloored = oracle_learn(pair, five, 256, raw);
  CHECK(unfloored.nodes[2].edges[0].weight == 256);
  CHECK(unfloored.nodes[2].edges[1].weight == 0);

  LearnOptions laplace;
  laplace.laplace_alpha = 1;
  SpnGraph smoothed = oracle_learn(pair, five, 256, laplace);
  CHECK(smoothed.nodes[2].edges[0].weight == 219);
  CHECK(smoothed.nodes[2].edges[1].weight == 37);

  SpnGraph even = oracle_learn(pair, rows_of({{1}, {0}}, 1), 256);
  CHECK(even.nodes[2].edges[0].weight == 128);
  CHECK(even.nodes[2].edges[1].weight == 128);
}

TEST_CASE("degenerate sum nodes fall back to uniform weights") {
  // A single-child sum is never exercised when its leaf never fires.
  SpnGraph g;
  g.num_vars = 1;
  g.scale = 256;
  g.nodes.resize(2);
  g.nodes[0].kind = NodeKind::Leaf;
  g.nodes[0].var = 0;
  g.nodes[1].kind = NodeKind::Sum;
  g.nodes[1].edges = {{0, 256}};
  g.root = 1;
  compute_scopes(g);

  std::vector<uint32_t> degenerate;
  SpnGraph m = oracle_learn(g, rows_of({{0}, {0}}, 1), 256, {}, &degenerate);
  CHECK(m.nodes[1].edges[0].weight == 256);
  CHECK(degenerate == std::vector<uint32_t>{1});
}

TEST_CASE("learned weights always normalize") {
  SeededRandom rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    SpnGraph g = testsupport::random_selective_spn(4, 256, rng);
    Dataset data = testsupport::random_dataset(4, 32, rng);
    SpnGraph m = oracle_learn(g, data, 256);
    for (const SpnNode& node : m.nodes) {
      if (node.kind != NodeKind::Sum) continue;
      uint64_t total = 0;
      for (const SumEdge& e : node.edges) {
        CHECK(e.weight > 0);
        total += e.weight;
      }
      CHECK(total == 256);
    }
  }
}

TEST_CASE("structure files round trip") {
  SpnGraph g = build_demo_network();
  std::string path = temp_path("roundtrip.spn");
  save_structure(g, path);
  SpnGraph back = load_structure(path);
  CHECK(graphs_equal(g, back));
  std::remove(path.c_str());
}

TEST_CASE("shipped structure files load and agree") {
  SpnGraph file = load_structure("data/fig1.spn");
  CHECK(graphs_equal(file, build_demo_network()));
  CHECK(evaluate(file, leaf_values_for_row(file, {1, 1})) ==
        doctest::Approx(0.045).epsilon(1e-12));

  SpnGraph toy = load_structure("data/toy_sum.spn");
  CHECK(validate(toy).empty());

  SpnGraph big = load_structure("data/nltcs_like.spn");
  StructureStats s = structure_stats(big);
  CHECK(big.num_vars == 16);
  CHECK(s.sums == 13);
  CHECK(s.products == 26);
  CHECK(s.leaves == 74);
  CHECK(s.edges == 112);
  CHECK(validate(big).empty());
}

TEST_CASE("structure parse errors carry context") {
  auto write_file = [](const std::string& path, const char* text) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs(text, f);
    std::fclose(f);
  };

  std::string path = temp_path("bad.spn");

  write_file(path, "spn 1\nvars 1\nscale 256\nnode 0 blob 0 +\nroot 0\n");
  CHECK_THROWS_AS(load_structure(path), ParseError);

  write_file(path, "vars 1\nscale 256\nnode 0 leaf 0 +\nroot 0\n");
  CHECK_THROWS_AS(load_structure(path), ParseError);

  write_file(path,
             "spn 1\nvars 1\nscale 256\nnode 0 leaf 0 +\nnode 0 leaf 0 -\n"
             "root 0\n");
  CHECK_THROWS_AS(load_structure(path), ParseError);

  write_file(path, "spn 1\nvars 1\nscale 256\nnode 0 leaf 0 +\n");
  CHECK_THROWS_AS(load_structure(path), ParseError);

  write_file(path,
             "spn 1\nvars 1\nscale 256\nnode 0 leaf 0 +\nnode 1 leaf 0 -\n"
             "node 2 sum 0:xyz 1:85\nroot 2\n");
  CHECK_THROWS_AS(load_structure(path), ParseError);

  // Syntactically fine but structurally broken: loading escalates the
  // validation result.
  write_file(path,
             "spn 1\nvars 2\nscale 256\nnode 0 leaf 0 +\nnode 1 leaf 1 +\n"
             "node 2 sum 0:128 1:128\nroot 2\n");
  CHECK_THROWS_AS(load_structure(path), DomainError);

  std::remove(path.c_str());
}

TEST_CASE("dataset files") {
  Dataset toy = load_dataset("data/toy3.csv");
  CHECK(toy.num_vars == 1);
  REQUIRE(toy.rows.size() == 3);
  CHECK(toy.rows[0] == std::vector<uint8_t>{1});
  CHECK(toy.rows[1] == std::vector<uint8_t>{1});
  CHECK(toy.rows[2] == std::vector<uint8_t>{0});

  SeededRandom rng(3);
  Dataset data = testsupport::random_dataset(5, 12, rng);
  std::string path = temp_path("data.csv");
  save_dataset(data, path);
  Dataset back = load_dataset(path, 5);
  CHECK(back.rows == data.rows);
  std::remove(path.c_str());

  auto write_file = [](const std::string& p, const char* text) {
    std::FILE* f = std::fopen(p.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs(text, f);
    std::fclose(f);
  };
  write_file(path, "0,1\n");
  CHECK_THROWS_AS(load_dataset(path), ParseError);
  write_file(path, "spn-dataset 1\n0,2\n");
  CHECK_THROWS_AS(load_dataset(path), ParseError);
  write_file(path, "spn-dataset 1\n0,1\n0\n");
  CHECK_THROWS_AS(load_dataset(path), ParseError);
  write_file(path, "spn-dataset 1\n0,1\n");
  CHECK_THROWS_AS(load_dataset(path, 3), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("dataset validation") {
  Dataset bad_width = rows_of({{1, 0}}, 1);
  CHECK_THROWS_AS(validate_dataset(bad_width), DomainError);
  Dataset bad_value = rows_of({{2}}, 1);
  CHECK_THROWS_AS(validate_dataset(bad_value), DomainError);
}

TEST_CASE("local statistics sum the edge counts") {
  SeededRandom rng(11);
  SpnGraph g = testsupport::random_selective_spn(4, 256, rng);
  Dataset data = testsupport::random_dataset(4, 20, rng);
  LocalStatistics stats = compute_local_statistics(g, data);
  CHECK(stats.rows == 20);
  for (uint32_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].kind != NodeKind::Sum) continue;
    uint64_t total = 0;
    for (uint64_t c : stats.num.counts[i]) total += c;
    CHECK(stats.den[i] == total);
    // Shared-subtree selective structures put every row through every node.
    CHECK(stats.den[i] == 20);
  }
}
