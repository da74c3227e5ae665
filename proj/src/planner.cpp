#include "spnmpc/planner.hpp"

#include <set>

#include "spnmpc/errors.hpp"

namespace spnmpc {

Exercise Planner::base(ExOp op, const std::string& id) {
  if (id.empty()) throw ConfigError("planned exercise needs a result id");
  Exercise ex;
  ex.op = op;
  ex.result = id;
  return ex;
}

std::string Planner::store_public(const std::string& id, u128 value) {
  Exercise ex = base(ExOp::StorePublic, id);
  ex.c0 = value;
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::add(const std::string& id, const std::string& a,
                         const std::string& b) {
  Exercise ex = base(ExOp::Add, id);
  ex.args = {a, b};
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::sub(const std::string& id, const std::string& a,
                         const std::string& b) {
  Exercise ex = base(ExOp::Sub, id);
  ex.args = {a, b};
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::scale_public(const std::string& id, const std::string& a,
                                  u128 c) {
  Exercise ex = base(ExOp::ScalePublic, id);
  ex.args = {a};
  ex.c0 = c;
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::public_minus(const std::string& id, u128 c,
                                  const std::string& a) {
  Exercise ex = base(ExOp::PublicMinus, id);
  ex.args = {a};
  ex.c0 = c;
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::deal_private(const std::string& id, uint16_t who,
                                  const std::string& private_name) {
  Exercise ex = base(ExOp::DealPrivate, id);
  ex.who = who;
  ex.args = {private_name};
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::deal_mask(const std::string& id, uint32_t rho, u128 d) {
  Exercise ex = base(ExOp::DealMask, id);
  ex.who = cfg_.alice;
  ex.c0 = rho;
  ex.c1 = d;
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::deal_mod(const std::string& id,
                              const std::string& source, u128 d) {
  Exercise ex = base(ExOp::DealMod, id);
  ex.who = cfg_.bob;
  ex.args = {source};
  ex.c0 = d;
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::reveal_to(const std::string& id, uint16_t who,
                               const std::string& source) {
  Exercise ex = base(ExOp::RevealTo, id);
  ex.who = who;
  ex.args = {source};
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::mul(const std::string& id, const std::string& a,
                         const std::string& b) {
  Exercise ex = base(ExOp::MulReshare, id);
  ex.args = {a, b};
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::jrsz(const std::string& id) {
  plan_.push(base(ExOp::Jrsz, id));
  return id;
}

std::string Planner::sq2pq(const std::string& id, const std::string& a) {
  Exercise ex = base(ExOp::Sq2Pq, id);
  ex.args = {a};
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::approx_mask(const std::string& id,
                                 const std::string& num,
                                 const std::string& den,
                                 const std::string& mask, u128 d,
                                 u128 parties) {
  Exercise ex = base(ExOp::ApproxMaskShare, id);
  ex.args = {num, den, mask};
  ex.c0 = d;
  ex.c1 = parties;
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::zero_poll(const std::string& id,
                               const std::string& private_name) {
  Exercise ex = base(ExOp::ZeroPoll, id);
  ex.args = {private_name};
  plan_.push(std::move(ex));
  return id;
}

std::string Planner::chain_add(const std::string& prefix,
                               const std::vector<std::string>& ids) {
  if (ids.empty()) throw ConfigError("chain_add over nothing");
  std::string acc = ids[0];
  for (size_t k = 1; k < ids.size(); ++k)
    acc = add(prefix + ".s" + std::to_string(k - 1), acc, ids[k]);
  return acc;
}

void Planner::branch(const std::string& poll_id, Plan all_zero,
                     Plan otherwise) {
  PlanItem item;
  item.kind = PlanItem::Kind::Branch;
  item.poll_id = poll_id;
  item.all_zero = std::move(all_zero.items);
  item.otherwise = std::move(otherwise.items);
  plan_.items.push_back(std::move(item));
}

std::string emit_div_by_public(Planner& pl, const std::string& prefix,
                               const std::string& u, u128 d) {
  const SessionConfig& cfg = pl.cfg();
  if (d < 2) throw ConfigError("public divisor must be at least 2");
  std::string m = pl.deal_mask(prefix + ".m", cfg.fp.rho, d);
  std::string z = pl.add(prefix + ".z", u, m + ".r");
  std::string zp = pl.reveal_to(prefix + ".zp", cfg.bob, z);
  std::string w = pl.deal_mod(prefix + ".w", zp, d);
  std::string uq = pl.add(prefix + ".uq", u, m + ".q");
  std::string s = pl.sub(prefix + ".t", uq, w);
  u128 dinv = inv_mod(d % cfg.field.modulus(), cfg.field.modulus());
  return pl.scale_public(prefix, s, dinv);
}

namespace {

// Smallest d * 2^j covering the divisor bound, with the lift capped so the
// rescale factor d*e/D stays an integer.
u128 lifted_scale(const FixedPointParams& fp, u128 divisor_bound) {
  u128 d = fp.d;
  u128 cap = static_cast<u128>(fp.d) * fp.e;
  if (divisor_bound > cap)
    throw ConfigError("divisor bound exceeds d*e; raise the precision scale");
  u128 scale = d;
  while (scale < divisor_bound) scale <<= 1;
  return scale;
}

}  // namespace

std::string emit_approx_inverse(Planner& pl, const std::string& prefix,
                                const std::string& b, u128 divisor_bound) {
  const SessionConfig& cfg = pl.cfg();
  const FixedPointParams& fp = cfg.fp;
  if (divisor_bound == 0) throw ConfigError("divisor bound must be positive");
  const u128 de = static_cast<u128>(fp.d) * fp.e;
  const u128 big = lifted_scale(fp, divisor_bound);

  std::string u = pl.store_public(prefix + ".u0", 1);
  uint32_t warm = fp.warmup_iters;
  uint32_t need = ceil_log2_u64(static_cast<uint64_t>(big));
  if (need > warm) warm = need;
  for (uint32_t i = 0; i < warm; ++i) {
    std::string it = prefix + ".wi" + std::to_string(i);
    std::string ub = pl.mul(it + ".a", u, b);
    std::string g = pl.public_minus(it + ".b", 2 * big, ub);
    std::string p = pl.mul(it + ".c", u, g);
    u = emit_div_by_public(pl, it, p, big);
  }
  if (big != de) u = pl.scale_public(prefix + ".rs", u, de / big);
  for (uint32_t i = 0; i < fp.precision_iters; ++i) {
    std::string it = prefix + ".pi" + std::to_string(i);
    std::string ub = pl.mul(it + ".a", u, b);
    std::string g = pl.public_minus(it + ".b", 2 * de, ub);
    std::string p = pl.mul(it + ".c", u, g);
    u = emit_div_by_public(pl, it, p, de);
  }
  return u;
}

std::string emit_secure_divide(Planner& pl, const std::string& prefix,
                               const std::string& a, const std::string& b,
                               u128 divisor_bound) {
  const FixedPointParams& fp = pl.cfg().fp;
  std::string inv = emit_approx_inverse(pl, prefix + ".v", b, divisor_bound);
  std::string av = pl.mul(prefix + ".av", a, inv);
  return emit_div_by_public(pl, prefix, av, fp.e);
}

std::string weight_id(uint32_t node, size_t edge) {
  return "w." + std::to_string(node) + "." + std::to_string(edge);
}

std::string leaf_config_id(const std::string& cfg, uint32_t var,
                           bool positive) {
  return "q." + cfg + "." + std::to_string(var) + (positive ? ".p" : ".n");
}

void emit_learn_exact(Planner& pl, const SpnGraph& spn,
                      uint64_t divisor_bound) {
  const SessionConfig& cfg = pl.cfg();
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    const SpnNode& node = spn.nodes[i];
    if (node.kind != NodeKind::Sum) continue;
    const std::string den_name = "st.den." + std::to_string(i);
    std::string poll =
        pl.zero_poll("poll." + std::to_string(i), den_name);

    // Degenerate arm: no row exercised this node anywhere, so weights fall
    // back to the public uniform split.
    Planner uniform(cfg);
    std::vector<uint64_t> ones(node.edges.size(), 1);
    auto flat = round_weights_largest_remainder(ones, ones.size(), cfg.fp.d);
    for (size_t j = 0; j < node.edges.size(); ++j)
      uniform.store_public(weight_id(i, j), flat[j]);

    Planner learned(cfg);
    for (size_t j = 0; j < node.edges.size(); ++j) {
      const std::string wid = weight_id(i, j);
      const std::string num_name =
          "st.num." + std::to_string(i) + "." + std::to_string(j);
      std::vector<std::string> num_parts, den_parts;
      for (uint16_t k = 1; k <= cfg.n; ++k) {
        num_parts.push_back(learned.deal_private(
            wid + ".nd" + std::to_string(k), k, num_name));
        den_parts.push_back(learned.deal_private(
            wid + ".dd" + std::to_string(k), k, den_name));
      }
      std::string num = learned.chain_add(wid + ".num", num_parts);
      std::string den = learned.chain_add(wid + ".den", den_parts);
      emit_secure_divide(learned, wid, num, den, divisor_bound);
    }
    pl.branch(poll, uniform.take(), learned.take());
  }
}

void emit_learn_approximate(Planner& pl, const SpnGraph& spn) {
  const SessionConfig& cfg = pl.cfg();
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    const SpnNode& node = spn.nodes[i];
    if (node.kind != NodeKind::Sum) continue;
    const std::string den_name = "st.den." + std::to_string(i);
    for (size_t j = 0; j < node.edges.size(); ++j) {
      const std::string wid = weight_id(i, j);
      const std::string num_name =
          "st.num." + std::to_string(i) + "." + std::to_string(j);
      std::string mask = pl.jrsz(wid + ".k");
      pl.approx_mask(wid, num_name, den_name, mask, cfg.fp.d, cfg.n);
    }
  }
}

InferIds emit_infer(Planner& pl, const SpnGraph& spn) {
  const SessionConfig& cfg = pl.cfg();
  if (!cfg.with_client)
    throw ConfigError("inference needs a client in the session");
  const u128 d = spn.scale;
  const uint16_t client = cfg.client_id();

  std::set<std::pair<uint32_t, bool>> literals;
  for (const SpnNode& node : spn.nodes)
    if (node.kind == NodeKind::Leaf)
      literals.insert({node.var, !node.negated});

  const std::vector<std::string> configs = {"xe", "e"};
  for (const std::string& c : configs)
    for (const auto& [var, positive] : literals) {
      std::string id = leaf_config_id(c, var, positive);
      pl.deal_private(id, client, id);
    }

  InferIds out;
  auto order = topo_order(spn);
  for (const std::string& c : configs) {
    std::vector<std::string> value(spn.nodes.size());
    for (uint32_t i : order) {
      const SpnNode& node = spn.nodes[i];
      const std::string vp = "v." + c + "." + std::to_string(i);
      switch (node.kind) {
        case NodeKind::Leaf:
          value[i] = leaf_config_id(c, node.var, !node.negated);
          break;
        case NodeKind::Product: {
          std::string acc = value[node.children[0]];
          for (size_t k = 1; k < node.children.size(); ++k) {
            std::string m = pl.mul(vp + ".m" + std::to_string(k), acc,
                                   value[node.children[k]]);
            acc = emit_div_by_public(pl, vp + ".f" + std::to_string(k), m, d);
          }
          value[i] = acc;
          break;
        }
        case NodeKind::Sum: {
          std::vector<std::string> terms;
          for (size_t j = 0; j < node.edges.size(); ++j) {
            std::string m = pl.mul(vp + ".e" + std::to_string(j),
                                   weight_id(i, j),
                                   value[node.edges[j].child]);
            terms.push_back(
                emit_div_by_public(pl, vp + ".t" + std::to_string(j), m, d));
          }
          value[i] = pl.chain_add(vp, terms);
          break;
        }
      }
    }
    std::string out_id = "out." + c;
    pl.reveal_to(out_id, client, value[spn.root]);
    (c == "xe" ? out.out_xe : out.out_e) = out_id;
  }
  return out;
}

}  // namespace spnmpc
