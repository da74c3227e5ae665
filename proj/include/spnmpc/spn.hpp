#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spnmpc {

enum class NodeKind : uint8_t { Sum, Product, Leaf };

struct SumEdge {
  uint32_t child = 0;
  uint64_t weight = 0;  // scaled by the graph's d; real weight is weight/d
  friend bool operator==(const SumEdge&, const SumEdge&) = default;
};

// One node of the graph. Only the fields for the node's kind are meaningful:
// leaves use var/negated, products use children, sums use edges. The scope is
// derived (compute_scopes) and kept sorted.
struct SpnNode {
  NodeKind kind = NodeKind::Leaf;
  uint32_t var = 0;
  bool negated = false;
  std::vector<uint32_t> children;
  std::vector<SumEdge> edges;
  std::vector<uint32_t> scope;
};

// Rooted DAG. Children may be shared between parents (the usual way indicator
// leaves are wired), so child indices are not required to be unique across
// nodes, only acyclic.
struct SpnGraph {
  uint32_t num_vars = 0;
  uint64_t scale = 256;  // the public fixed-point d the weights are scaled by
  uint32_t root = 0;
  std::vector<SpnNode> nodes;
};

bool graphs_equal(const SpnGraph& a, const SpnGraph& b);

// Children-before-parents order over every node (not just those reachable
// from the root). Throws DomainError on a cycle or an out-of-range child.
std::vector<uint32_t> topo_order(const SpnGraph& spn);

// Fills every node's scope bottom-up: {var} at leaves, union of child scopes
// elsewhere. Throws DomainError on a cycle or an out-of-range index.
void compute_scopes(SpnGraph& spn);

struct Violation {
  uint32_t node = 0;
  std::string message;
};

// Structural checks: indices, acyclicity, reachability from the root,
// completeness of sums, decomposability of products, and weight sums within
// |children| rounding units of the scale. Violations are returned as data;
// nothing throws.
std::vector<Violation> validate(const SpnGraph& spn);

struct Dataset {
  uint32_t num_vars = 0;
  std::vector<std::vector<uint8_t>> rows;
};

// Throws DomainError unless every row has num_vars entries, all 0 or 1.
void validate_dataset(const Dataset& data);

// Per-node positivity of the subnetwork value under one complete row. A leaf
// is positive when the row matches its polarity, a product when all children
// are, a sum when some child with a nonzero weight is.
std::vector<uint8_t> positive_nodes(const SpnGraph& spn,
                                    const std::vector<uint8_t>& row);

struct SelectivityViolation {
  size_t row = 0;
  uint32_t node = 0;
};

// Rows and sum nodes where two or more children evaluate positive. Empty on
// a selective structure.
std::vector<SelectivityViolation> check_selectivity(const SpnGraph& spn,
                                                    const Dataset& data);

// One value per (variable, polarity); both set to 1 marginalizes the
// variable out.
struct LeafValues {
  std::vector<double> pos;
  std::vector<double> neg;
};

LeafValues leaf_values_for_row(const SpnGraph& spn,
                               const std::vector<uint8_t>& row);
LeafValues leaf_values_all_ones(const SpnGraph& spn);

// Bottom-up network evaluation: sums compute sum(w_j/d * v_j), products
// compute the plain product. Throws DomainError when the leaf value vectors
// are not sized num_vars.
double evaluate(const SpnGraph& spn, const LeafValues& leaves);

// counts[i][k] pairs with nodes[i].edges[k]; empty vectors at non-sum nodes.
struct EdgeCounts {
  std::vector<std::vector<uint64_t>> counts;
};

// n_ij = number of rows where child j's subnetwork evaluates positive.
// Throws DomainError naming the first offending (row, node) when the data
// breaks selectivity.
EdgeCounts count_contributions(const SpnGraph& spn, const Dataset& data);

// Largest-remainder rounding of d*c_j/den to integers summing to exactly d.
// Ties go to the lower index. den must be positive.
std::vector<uint64_t> round_weights_largest_remainder(
    const std::vector<uint64_t>& counts, uint64_t den, uint64_t d);

struct LearnOptions {
  uint32_t laplace_alpha = 0;  // add-alpha smoothing of the counts, 0 = off
  bool zero_floor = true;      // lift zero weights to 1 after rounding
};

// Closed-form maximum-likelihood weights from the contribution counts,
// rounded to scale d per sum node. Sum nodes whose counts are all zero fall
// back to uniform weights and are reported through degenerate_out when given.
SpnGraph oracle_learn(const SpnGraph& spn, const Dataset& data, uint64_t d,
                      const LearnOptions& options = {},
                      std::vector<uint32_t>* degenerate_out = nullptr);

struct StructureStats {
  uint32_t sums = 0;
  uint32_t products = 0;
  uint32_t leaves = 0;
  uint32_t edges = 0;      // sum edges + product child links
  uint32_t sum_edges = 0;  // weighted edges only, i.e. learnable parameters
  uint32_t depth = 0;      // edges on the longest root-to-leaf path
};

StructureStats structure_stats(const SpnGraph& spn);

// What one party contributes to learning: per-edge numerators, per-node
// denominators (their sum), and the local row count.
struct LocalStatistics {
  EdgeCounts num;
  std::vector<uint64_t> den;
  uint64_t rows = 0;
};

LocalStatistics compute_local_statistics(const SpnGraph& spn,
                                         const Dataset& data);

}  // namespace spnmpc
