#include "spnmpc/protocols.hpp"

#include <algorithm>
#include <charconv>
#include <memory>
#include <set>
#include <utility>

#include "spnmpc/errors.hpp"
#include "spnmpc/planner.hpp"
#include "spnmpc/transport_local.hpp"
#include "spnmpc/transport_socket.hpp"

namespace spnmpc {

namespace {

std::string trim(const std::string& s) {
  size_t start = s.find_first_not_of(" \t");
  if (start == std::string::npos) return "";
  size_t stop = s.find_last_not_of(" \t");
  return s.substr(start, stop - start + 1);
}

// The distinct (variable, polarity) pairs the structure's leaves test.
std::set<std::pair<uint32_t, bool>> leaf_literals(const SpnGraph& spn) {
  std::set<std::pair<uint32_t, bool>> out;
  for (const SpnNode& node : spn.nodes)
    if (node.kind == NodeKind::Leaf) out.insert({node.var, !node.negated});
  return out;
}

void require_vars_in_structure(const SpnGraph& spn,
                               const std::vector<Assignment>& assigned) {
  std::set<uint32_t> vars;
  for (const auto& [var, positive] : leaf_literals(spn)) vars.insert(var);
  for (const Assignment& a : assigned)
    if (!vars.count(a.var))
      throw DomainError("variable " + std::to_string(a.var) +
                        " has no leaf in the structure");
}

// Wires datasets into per-member private statistic inputs and returns the
// overall row count. parts[k] belongs to member k+1.
uint64_t attach_statistics(const SpnGraph& spn,
                           const std::vector<Dataset>& parts,
                           SessionOptions& opts) {
  uint64_t total = 0;
  for (uint16_t k = 1; k <= opts.cfg.n; ++k) {
    auto priv = local_statistic_inputs(spn, parts[k - 1]);
    opts.private_inputs[k].insert(priv.begin(), priv.end());
    opts.rows[k] = parts[k - 1].rows.size();
    total += parts[k - 1].rows.size();
  }
  return total;
}

std::vector<std::string> all_weight_ids(const SpnGraph& spn) {
  std::vector<std::string> ids;
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    if (spn.nodes[i].kind != NodeKind::Sum) continue;
    for (size_t j = 0; j < spn.nodes[i].edges.size(); ++j)
      ids.push_back(weight_id(i, j));
  }
  return ids;
}

// Runs one fixed plan on the requested transport and harvests the listed
// store ids per party, plus the manager's poll outcomes and traffic.
struct SessionHarvest {
  std::map<uint16_t, std::map<std::string, StoredValue>> stores;
  std::map<std::string, bool> polls;
  TrafficCounters traffic;
};

SessionHarvest run_plan(const SessionOptions& opts, Plan plan,
                        const std::vector<uint16_t>& parties,
                        const std::vector<std::string>& ids,
                        TransportKind transport) {
  SessionHarvest harvest;
  if (transport == TransportKind::InProcess) {
    LocalSession session(opts);
    session.run(std::move(plan));
    for (uint16_t id : parties) {
      const auto& store = session.member(id).store();
      for (const std::string& name : ids)
        if (auto it = store.find(name); it != store.end())
          harvest.stores[id][name] = it->second;
    }
    harvest.polls = session.manager().poll_results();
    harvest.traffic = session.counters();
  } else {
    SocketSession session(opts);
    session.run(std::move(plan));
    for (uint16_t id : parties) {
      const auto& store = session.party(id).store;
      for (const std::string& name : ids)
        if (auto it = store.find(name); it != store.end())
          harvest.stores[id][name] = it->second;
    }
    harvest.polls = session.manager_result().polls;
    harvest.traffic = session.counters();
  }
  return harvest;
}

}  // namespace

std::vector<Assignment> parse_assignments(const std::string& text,
                                          uint32_t num_vars) {
  std::vector<Assignment> out;
  std::set<uint32_t> seen;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string token =
        trim(text.substr(pos, comma == std::string::npos ? std::string::npos
                                                         : comma - pos));
    pos = comma == std::string::npos ? text.size() + 1 : comma + 1;
    if (token.empty()) {
      if (comma == std::string::npos && out.empty() && trim(text).empty())
        break;  // a blank string means no assignments
      if (comma == std::string::npos && pos > text.size()) break;
      throw ParseError("empty assignment in '" + text + "'");
    }
    size_t eq = token.find('=');
    if (eq == std::string::npos)
      throw ParseError("assignment '" + token + "' lacks '='");
    std::string lhs = trim(token.substr(0, eq));
    std::string rhs = trim(token.substr(eq + 1));
    if (!lhs.empty() && (lhs[0] == 'X' || lhs[0] == 'x')) lhs = lhs.substr(1);
    if (lhs.empty()) throw ParseError("assignment '" + token + "' lacks a variable");
    uint32_t var = 0;
    auto [ptr, ec] = std::from_chars(lhs.data(), lhs.data() + lhs.size(), var);
    if (ec != std::errc() || ptr != lhs.data() + lhs.size())
      throw ParseError("bad variable '" + lhs + "'");
    if (rhs != "0" && rhs != "1")
      throw ParseError("assignment value must be 0 or 1, got '" + rhs + "'");
    if (var >= num_vars)
      throw DomainError("variable " + std::to_string(var) +
                        " out of range for " + std::to_string(num_vars) +
                        " variables");
    if (!seen.insert(var).second)
      throw DomainError("variable " + std::to_string(var) +
                        " assigned twice");
    out.push_back({var, rhs == "1"});
  }
  return out;
}

void check_consistent(const EvidenceQuery& q) {
  std::map<uint32_t, bool> evidence_vars;
  for (const Assignment& a : q.evidence) evidence_vars[a.var] = a.value;
  for (const Assignment& a : q.query) {
    auto it = evidence_vars.find(a.var);
    if (it != evidence_vars.end() && it->second != a.value)
      throw DomainError("variable " + std::to_string(a.var) +
                        " is assigned contradicting values in query and "
                        "evidence");
  }
}

std::map<std::string, u128> leaf_inputs(
    const SpnGraph& spn, const std::string& cfg_name,
    const std::vector<Assignment>& assigned) {
  std::map<uint32_t, bool> pinned;
  for (const Assignment& a : assigned) pinned[a.var] = a.value;
  std::map<std::string, u128> out;
  for (const auto& [var, positive] : leaf_literals(spn)) {
    u128 value = spn.scale;
    if (auto it = pinned.find(var); it != pinned.end())
      value = it->second == positive ? spn.scale : 0;
    out[leaf_config_id(cfg_name, var, positive)] = value;
  }
  return out;
}

std::map<std::string, u128> local_statistic_inputs(const SpnGraph& spn,
                                                   const Dataset& data) {
  LocalStatistics stats = compute_local_statistics(spn, data);
  std::map<std::string, u128> priv;
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    if (spn.nodes[i].kind != NodeKind::Sum) continue;
    priv["st.den." + std::to_string(i)] = stats.den[i];
    for (size_t j = 0; j < spn.nodes[i].edges.size(); ++j)
      priv["st.num." + std::to_string(i) + "." + std::to_string(j)] =
          stats.num.counts[i][j];
  }
  return priv;
}

Plan learning_plan(const SpnGraph& spn, const SessionConfig& cfg,
                   uint64_t total_rows, bool approximate) {
  if (spn.scale != cfg.fp.d)
    throw ConfigError("structure scale " + std::to_string(spn.scale) +
                      " does not match the session scale " +
                      std::to_string(cfg.fp.d));
  if (approximate)
    cfg.fp.validate_base(cfg.field);
  else
    cfg.fp.validate_newton(cfg.field);

  Planner pl(cfg);
  if (approximate)
    emit_learn_approximate(pl, spn);
  else
    emit_learn_exact(pl, spn, std::max<uint64_t>(2, total_rows));
  return pl.take();
}

LearnOutcome run_learning(const SpnGraph& spn,
                          const std::vector<Dataset>& parts,
                          SessionOptions opts, bool approximate,
                          TransportKind transport) {
  const SessionConfig& cfg = opts.cfg;
  if (parts.size() != cfg.n)
    throw ConfigError("learning needs one dataset per member, got " +
                      std::to_string(parts.size()) + " for " +
                      std::to_string(cfg.n));

  LearnOutcome out;
  out.total_rows = attach_statistics(spn, parts, opts);
  Plan plan = learning_plan(spn, cfg, out.total_rows, approximate);

  std::vector<uint16_t> members;
  for (uint16_t k = 1; k <= cfg.n; ++k) members.push_back(k);
  SessionHarvest harvest =
      run_plan(opts, std::move(plan), members, all_weight_ids(spn), transport);

  out.weight_shares = std::move(harvest.stores);
  out.traffic = harvest.traffic;
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    if (spn.nodes[i].kind != NodeKind::Sum) continue;
    auto it = harvest.polls.find("poll." + std::to_string(i));
    if (it != harvest.polls.end() && it->second) out.degenerate.push_back(i);
  }
  return out;
}

SpnGraph open_learned_weights(const SpnGraph& spn, const LearnOutcome& out,
                              const SessionConfig& cfg) {
  std::map<uint16_t, const std::map<std::string, StoredValue>*> stores;
  for (const auto& [id, store] : out.weight_shares) stores[id] = &store;
  SpnGraph opened = spn;
  for (uint32_t i = 0; i < opened.nodes.size(); ++i) {
    if (opened.nodes[i].kind != NodeKind::Sum) continue;
    for (size_t j = 0; j < opened.nodes[i].edges.size(); ++j) {
      u128 w = reconstruct_stored(stores, cfg, weight_id(i, j));
      opened.nodes[i].edges[j].weight = static_cast<uint64_t>(w);
    }
  }
  return opened;
}

std::map<uint16_t, std::map<std::string, StoredValue>> share_graph_weights(
    const SpnGraph& spn, const SessionConfig& cfg, RandomSource& rng) {
  std::map<uint16_t, std::map<std::string, StoredValue>> shares;
  SharingParams sharing = cfg.sharing();
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    if (spn.nodes[i].kind != NodeKind::Sum) continue;
    for (size_t j = 0; j < spn.nodes[i].edges.size(); ++j) {
      std::string wid = weight_id(i, j);
      auto dealt = shamir_share(cfg.field.element(spn.nodes[i].edges[j].weight),
                                sharing, rng, wid);
      for (const auto& sh : dealt)
        shares[sh.owner.value][wid] = {ValueKind::PolyShare,
                                       sh.value.value()};
    }
  }
  return shares;
}

InferOutcome run_inference(
    const SpnGraph& spn, const EvidenceQuery& q,
    const std::map<uint16_t, std::map<std::string, StoredValue>>&
        weight_shares,
    SessionOptions opts, TransportKind transport) {
  check_consistent(q);
  require_vars_in_structure(spn, q.query);
  require_vars_in_structure(spn, q.evidence);
  SessionConfig& cfg = opts.cfg;
  cfg.with_client = true;
  if (spn.scale != cfg.fp.d)
    throw ConfigError("structure scale " + std::to_string(spn.scale) +
                      " does not match the session scale " +
                      std::to_string(cfg.fp.d));
  cfg.fp.validate_base(cfg.field);

  // The joint configuration pins query and evidence, the denominator only
  // the evidence.
  std::vector<Assignment> joint = q.query;
  joint.insert(joint.end(), q.evidence.begin(), q.evidence.end());
  auto& client_priv = opts.private_inputs[cfg.client_id()];
  for (const auto& [name, value] : leaf_inputs(spn, "xe", joint))
    client_priv[name] = value;
  for (const auto& [name, value] : leaf_inputs(spn, "e", q.evidence))
    client_priv[name] = value;

  // Approximate learning leaves additive weight shares behind; those become
  // polynomial shares inside the session before the first multiplication.
  Planner pl(cfg);
  for (const std::string& wid : all_weight_ids(spn)) {
    bool additive = false;
    for (const auto& [id, store] : weight_shares) {
      auto it = store.find(wid);
      if (it == store.end())
        throw ConfigError("weight shares are missing " + wid);
      if (it->second.kind == ValueKind::AddShare) additive = true;
    }
    for (uint16_t k = 1; k <= cfg.n; ++k) {
      auto party = weight_shares.find(k);
      if (party == weight_shares.end())
        throw ConfigError("no weight shares for member " + std::to_string(k));
      const StoredValue& v = party->second.at(wid);
      opts.preloaded[k][additive ? wid + ".add" : wid] = v;
    }
    if (additive) pl.sq2pq(wid, wid + ".add");
  }
  InferIds ids = emit_infer(pl, spn);

  SessionHarvest harvest = run_plan(opts, pl.take(), {cfg.client_id()},
                                    {ids.out_xe, ids.out_e}, transport);

  InferOutcome out;
  out.traffic = harvest.traffic;
  const auto& client_store = harvest.stores[cfg.client_id()];
  out.raw_xe = client_store.at(ids.out_xe).value;
  out.raw_e = client_store.at(ids.out_e).value;
  if (out.raw_e == 0)
    throw DomainError("evidence has probability zero under the model");
  out.estimate = static_cast<double>(static_cast<long double>(out.raw_xe) /
                                     static_cast<long double>(out.raw_e));
  return out;
}

}  // namespace spnmpc
