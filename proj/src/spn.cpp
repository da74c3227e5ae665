#include "spnmpc/spn.hpp"

#include <algorithm>
#include <cstddef>

#include "spnmpc/errors.hpp"
#include "spnmpc/int128.hpp"

namespace spnmpc {

namespace {

// Children of a node regardless of kind, as a flat index list.
std::vector<uint32_t> child_indices(const SpnNode& node) {
  if (node.kind == NodeKind::Product) return node.children;
  std::vector<uint32_t> out;
  if (node.kind == NodeKind::Sum) {
    out.reserve(node.edges.size());
    for (const SumEdge& e : node.edges) out.push_back(e.child);
  }
  return out;
}

}  // namespace

bool graphs_equal(const SpnGraph& a, const SpnGraph& b) {
  if (a.num_vars != b.num_vars || a.scale != b.scale || a.root != b.root ||
      a.nodes.size() != b.nodes.size()) {
    return false;
  }
  for (size_t i = 0; i < a.nodes.size(); ++i) {
    const SpnNode& x = a.nodes[i];
    const SpnNode& y = b.nodes[i];
    if (x.kind != y.kind) return false;
    switch (x.kind) {
      case NodeKind::Leaf:
        if (x.var != y.var || x.negated != y.negated) return false;
        break;
      case NodeKind::Product:
        if (x.children != y.children) return false;
        break;
      case NodeKind::Sum:
        if (x.edges != y.edges) return false;
        break;
    }
  }
  return true;
}

std::vector<uint32_t> topo_order(const SpnGraph& spn) {
  const size_t n = spn.nodes.size();
  // 0 = unvisited, 1 = on the stack, 2 = done.
  std::vector<uint8_t> color(n, 0);
  std::vector<uint32_t> order;
  order.reserve(n);
  // Explicit stack; the second element marks the post-visit return.
  std::vector<std::pair<uint32_t, bool>> stack;
  for (uint32_t start = 0; start < n; ++start) {
    if (color[start] != 0) continue;
    stack.emplace_back(start, false);
    while (!stack.empty()) {
      auto [idx, post] = stack.back();
      stack.pop_back();
      if (post) {
        color[idx] = 2;
        order.push_back(idx);
        continue;
      }
      if (color[idx] == 2) continue;
      if (color[idx] == 1) continue;  // already scheduled for post-visit
      color[idx] = 1;
      stack.emplace_back(idx, true);
      for (uint32_t c : child_indices(spn.nodes[idx])) {
        if (c >= n) {
          throw DomainError("node " + std::to_string(idx) +
                            " references missing child " + std::to_string(c));
        }
        if (color[c] == 1) {
          throw DomainError("cycle through node " + std::to_string(c));
        }
        if (color[c] == 0) stack.emplace_back(c, false);
      }
    }
  }
  return order;
}

void compute_scopes(SpnGraph& spn) {
  for (uint32_t idx : topo_order(spn)) {
    SpnNode& node = spn.nodes[idx];
    if (node.kind == NodeKind::Leaf) {
      node.scope = {node.var};
      continue;
    }
    std::vector<uint32_t> merged;
    for (uint32_t c : child_indices(node)) {
      const std::vector<uint32_t>& cs = spn.nodes[c].scope;
      std::vector<uint32_t> next;
      next.reserve(merged.size() + cs.size());
      std::set_union(merged.begin(), merged.end(), cs.begin(), cs.end(),
                     std::back_inserter(next));
      merged = std::move(next);
    }
    node.scope = std::move(merged);
  }
}

std::vector<Violation> validate(const SpnGraph& spn) {
  std::vector<Violation> out;
  const size_t n = spn.nodes.size();
  if (n == 0) {
    out.push_back({0, "graph has no nodes"});
    return out;
  }
  if (spn.root >= n) {
    out.push_back({spn.root, "root index out of range"});
    return out;
  }
  for (uint32_t i = 0; i < n; ++i) {
    for (uint32_t c : child_indices(spn.nodes[i])) {
      if (c >= n) {
        out.push_back({i, "child index " + std::to_string(c) +
                              " out of range"});
      }
    }
  }
  if (!out.empty()) return out;  // the passes below need valid indices

  SpnGraph scoped = spn;
  try {
    compute_scopes(scoped);
  } catch (const DomainError& err) {
    out.push_back({spn.root, err.what()});
    return out;
  }

  // Reachability from the root.
  std::vector<uint8_t> seen(n, 0);
  std::vector<uint32_t> frontier{spn.root};
  seen[spn.root] = 1;
  while (!frontier.empty()) {
    uint32_t idx = frontier.back();
    frontier.pop_back();
    for (uint32_t c : child_indices(spn.nodes[idx])) {
      if (!seen[c]) {
        seen[c] = 1;
        frontier.push_back(c);
      }
    }
  }
  for (uint32_t i = 0; i < n; ++i) {
    if (!seen[i]) out.push_back({i, "unreachable from root"});
  }

  for (uint32_t i = 0; i < n; ++i) {
    const SpnNode& node = scoped.nodes[i];
    switch (node.kind) {
      case NodeKind::Leaf:
        if (node.var >= spn.num_vars) {
          out.push_back({i, "leaf variable out of range"});
        }
        break;
      case NodeKind::Sum: {
        if (node.edges.empty()) {
          out.push_back({i, "sum node has no children"});
          break;
        }
        uint64_t total = 0;
        bool nonpositive = false;
        for (const SumEdge& e : node.edges) {
          total += e.weight;
          if (e.weight == 0) nonpositive = true;
        }
        if (nonpositive) {
          out.push_back({i, "sum node has a zero weight"});
        }
        uint64_t slack = node.edges.size();
        uint64_t lo = spn.scale > slack ? spn.scale - slack : 0;
        if (total < lo || total > spn.scale + slack) {
          out.push_back({i, "sum weights total " + std::to_string(total) +
                                ", expected about " +
                                std::to_string(spn.scale)});
        }
        const std::vector<uint32_t>& first =
            scoped.nodes[node.edges[0].child].scope;
        for (size_t k = 1; k < node.edges.size(); ++k) {
          if (scoped.nodes[node.edges[k].child].scope != first) {
            out.push_back({i, "completeness: child scopes differ"});
            break;
          }
        }
        break;
      }
      case NodeKind::Product: {
        if (node.children.empty()) {
          out.push_back({i, "product node has no children"});
          break;
        }
        std::vector<uint32_t> acc;
        bool overlap = false;
        for (uint32_t c : node.children) {
          const std::vector<uint32_t>& cs = scoped.nodes[c].scope;
          std::vector<uint32_t> inter;
          std::set_intersection(acc.begin(), acc.end(), cs.begin(), cs.end(),
                                std::back_inserter(inter));
          if (!inter.empty()) {
            overlap = true;
            break;
          }
          std::vector<uint32_t> merged;
          std::set_union(acc.begin(), acc.end(), cs.begin(), cs.end(),
                         std::back_inserter(merged));
          acc = std::move(merged);
        }
        if (overlap) {
          out.push_back({i, "decomposability: child scopes overlap"});
        }
        break;
      }
    }
  }
  return out;
}

void validate_dataset(const Dataset& data) {
  for (size_t r = 0; r < data.rows.size(); ++r) {
    if (data.rows[r].size() != data.num_vars) {
      throw DomainError("row " + std::to_string(r) + " has " +
                        std::to_string(data.rows[r].size()) + " values, want " +
                        std::to_string(data.num_vars));
    }
    for (uint8_t v : data.rows[r]) {
      if (v > 1) {
        throw DomainError("row " + std::to_string(r) +
                          " has a value outside {0,1}");
      }
    }
  }
}

std::vector<uint8_t> positive_nodes(const SpnGraph& spn,
                                    const std::vector<uint8_t>& row) {
  if (row.size() != spn.num_vars) {
    throw DomainError("row width does not match variable count");
  }
  std::vector<uint8_t> flag(spn.nodes.size(), 0);
  for (uint32_t idx : topo_order(spn)) {
    const SpnNode& node = spn.nodes[idx];
    switch (node.kind) {
      case NodeKind::Leaf:
        flag[idx] = (row[node.var] == (node.negated ? 0 : 1)) ? 1 : 0;
        break;
      case NodeKind::Product: {
        uint8_t all = 1;
        for (uint32_t c : node.children) all &= flag[c];
        flag[idx] = all;
        break;
      }
      case NodeKind::Sum: {
        uint8_t any = 0;
        for (const SumEdge& e : node.edges) {
          if (e.weight > 0) any |= flag[e.child];
        }
        flag[idx] = any;
        break;
      }
    }
  }
  return flag;
}

std::vector<SelectivityViolation> check_selectivity(const SpnGraph& spn,
                                                    const Dataset& data) {
  validate_dataset(data);
  std::vector<SelectivityViolation> out;
  for (size_t r = 0; r < data.rows.size(); ++r) {
    std::vector<uint8_t> flag = positive_nodes(spn, data.rows[r]);
    for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
      const SpnNode& node = spn.nodes[i];
      if (node.kind != NodeKind::Sum) continue;
      int positive = 0;
      for (const SumEdge& e : node.edges) positive += flag[e.child];
      if (positive >= 2) out.push_back({r, i});
    }
  }
  return out;
}

LeafValues leaf_values_for_row(const SpnGraph& spn,
                               const std::vector<uint8_t>& row) {
  if (row.size() != spn.num_vars) {
    throw DomainError("row width does not match variable count");
  }
  LeafValues lv;
  lv.pos.resize(spn.num_vars);
  lv.neg.resize(spn.num_vars);
  for (uint32_t v = 0; v < spn.num_vars; ++v) {
    lv.pos[v] = row[v] ? 1.0 : 0.0;
    lv.neg[v] = row[v] ? 0.0 : 1.0;
  }
  return lv;
}

LeafValues leaf_values_all_ones(const SpnGraph& spn) {
  LeafValues lv;
  lv.pos.assign(spn.num_vars, 1.0);
  lv.neg.assign(spn.num_vars, 1.0);
  return lv;
}

double evaluate(const SpnGraph& spn, const LeafValues& leaves) {
  if (leaves.pos.size() != spn.num_vars ||
      leaves.neg.size() != spn.num_vars) {
    throw DomainError("leaf value vectors must be sized num_vars");
  }
  std::vector<double> value(spn.nodes.size(), 0.0);
  const double d = static_cast<double>(spn.scale);
  for (uint32_t idx : topo_order(spn)) {
    const SpnNode& node = spn.nodes[idx];
    switch (node.kind) {
      case NodeKind::Leaf:
        value[idx] = node.negated ? leaves.neg[node.var] : leaves.pos[node.var];
        break;
      case NodeKind::Product: {
        double prod = 1.0;
        for (uint32_t c : node.children) prod *= value[c];
        value[idx] = prod;
        break;
      }
      case NodeKind::Sum: {
        double sum = 0.0;
        for (const SumEdge& e : node.edges) {
          sum += (static_cast<double>(e.weight) / d) * value[e.child];
        }
        value[idx] = sum;
        break;
      }
    }
  }
  return value[spn.root];
}

EdgeCounts count_contributions(const SpnGraph& spn, const Dataset& data) {
  std::vector<SelectivityViolation> bad = check_selectivity(spn, data);
  if (!bad.empty()) {
    throw DomainError("selectivity violated at row " +
                      std::to_string(bad[0].row) + ", sum node " +
                      std::to_string(bad[0].node));
  }
  EdgeCounts out;
  out.counts.resize(spn.nodes.size());
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    if (spn.nodes[i].kind == NodeKind::Sum) {
      out.counts[i].assign(spn.nodes[i].edges.size(), 0);
    }
  }
  for (const std::vector<uint8_t>& row : data.rows) {
    std::vector<uint8_t> flag = positive_nodes(spn, row);
    for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
      const SpnNode& node = spn.nodes[i];
      if (node.kind != NodeKind::Sum) continue;
      for (size_t k = 0; k < node.edges.size(); ++k) {
        if (flag[node.edges[k].child]) ++out.counts[i][k];
      }
    }
  }
  return out;
}

std::vector<uint64_t> round_weights_largest_remainder(
    const std::vector<uint64_t>& counts, uint64_t den, uint64_t d) {
  if (den == 0) throw DomainError("rounding with zero denominator");
  if (counts.empty()) throw DomainError("rounding with no counts");
  const size_t k = counts.size();
  std::vector<uint64_t> weights(k);
  std::vector<u128> remainders(k);
  uint64_t assigned = 0;
  for (size_t j = 0; j < k; ++j) {
    u128 scaled = static_cast<u128>(d) * counts[j];
    weights[j] = static_cast<uint64_t>(scaled / den);
    remainders[j] = scaled % den;
    assigned += weights[j];
  }
  // Hand out the leftover units by descending remainder, lower index first
  // on ties, so the result is deterministic.
  std::vector<size_t> order(k);
  for (size_t j = 0; j < k; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainders[a] > remainders[b];
  });
  uint64_t leftover = d - assigned;  // < k by construction
  for (uint64_t step = 0; step < leftover; ++step) {
    ++weights[order[step % k]];
  }
  return weights;
}

SpnGraph oracle_learn(const SpnGraph& spn, const Dataset& data, uint64_t d,
                      const LearnOptions& options,
                      std::vector<uint32_t>* degenerate_out) {
  EdgeCounts counts = count_contributions(spn, data);
  SpnGraph model = spn;
  model.scale = d;
  if (degenerate_out) degenerate_out->clear();
  for (uint32_t i = 0; i < model.nodes.size(); ++i) {
    SpnNode& node = model.nodes[i];
    if (node.kind != NodeKind::Sum) continue;
    const size_t k = node.edges.size();
    std::vector<uint64_t> c = counts.counts[i];
    if (options.laplace_alpha > 0) {
      for (uint64_t& v : c) v += options.laplace_alpha;
    }
    uint64_t den = 0;
    for (uint64_t v : c) den += v;
    std::vector<uint64_t> weights;
    if (den == 0) {
      // No row exercised this node (and no smoothing): fall back to a
      // uniform split so the model still normalizes.
      weights = round_weights_largest_remainder(
          std::vector<uint64_t>(k, 1), k, d);
      if (degenerate_out) degenerate_out->push_back(i);
    } else {
      weights = round_weights_largest_remainder(c, den, d);
    }
    if (options.zero_floor) {
      // Zero weights break the positive-weight invariant downstream; lift
      // them to 1 and take the units back from the largest weights.
      for (size_t j = 0; j < k; ++j) {
        if (weights[j] == 0) {
          size_t big = 0;
          for (size_t m = 1; m < k; ++m) {
            if (weights[m] > weights[big]) big = m;
          }
          if (weights[big] <= 1) {
            throw DomainError("cannot zero-floor weights at scale " +
                              std::to_string(d));
          }
          --weights[big];
          ++weights[j];
        }
      }
    }
    for (size_t j = 0; j < k; ++j) node.edges[j].weight = weights[j];
  }
  return model;
}

StructureStats structure_stats(const SpnGraph& spn) {
  StructureStats s;
  for (const SpnNode& node : spn.nodes) {
    switch (node.kind) {
      case NodeKind::Sum:
        ++s.sums;
        s.edges += static_cast<uint32_t>(node.edges.size());
        s.sum_edges += static_cast<uint32_t>(node.edges.size());
        break;
      case NodeKind::Product:
        ++s.products;
        s.edges += static_cast<uint32_t>(node.children.size());
        break;
      case NodeKind::Leaf:
        ++s.leaves;
        break;
    }
  }
  // Longest path from the root, counted in edges: relax parent-to-child
  // along reverse topo order (parents first).
  std::vector<uint32_t> depth(spn.nodes.size(), 0);
  std::vector<uint32_t> order = topo_order(spn);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    uint32_t idx = *it;
    const SpnNode& node = spn.nodes[idx];
    for (uint32_t c : child_indices(node)) {
      if (depth[c] < depth[idx] + 1) depth[c] = depth[idx] + 1;
    }
  }
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    if (spn.nodes[i].kind == NodeKind::Leaf && depth[i] > s.depth) {
      s.depth = depth[i];
    }
  }
  return s;
}

LocalStatistics compute_local_statistics(const SpnGraph& spn,
                                         const Dataset& data) {
  LocalStatistics out;
  out.num = count_contributions(spn, data);
  out.den.assign(spn.nodes.size(), 0);
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    for (uint64_t v : out.num.counts[i]) out.den[i] += v;
  }
  out.rows = data.rows.size();
  return out;
}

}  // namespace spnmpc
