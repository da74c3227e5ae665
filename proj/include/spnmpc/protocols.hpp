#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spnmpc/party.hpp"
#include "spnmpc/spn.hpp"

namespace spnmpc {

// One pinned variable of a marginal query.
struct Assignment {
  uint32_t var = 0;
  bool value = false;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Parses "X0=1,X3=0" (the leading X is optional, spaces are tolerated).
// Throws ParseError on syntax, DomainError on out-of-range or repeated
// variables. An empty string parses to no assignments.
std::vector<Assignment> parse_assignments(const std::string& text,
                                          uint32_t num_vars);

// A conditional marginal P(query | evidence). Evidence may be empty, in
// which case the denominator opens to the scale itself.
struct EvidenceQuery {
  std::vector<Assignment> query;
  std::vector<Assignment> evidence;
};

// Throws DomainError when a variable carries contradicting values across
// query and evidence. Repeating an assignment on both sides is fine; the
// joint configuration simply deduplicates it (so querying the evidence
// itself yields probability one).
void check_consistent(const EvidenceQuery& q);

// The client's private leaf inputs for one configuration: an assigned
// variable pins its matching polarity to the scale and the complement to
// zero; unassigned variables carry the scale on both polarities, which
// marginalizes them out. Only literals the structure actually uses appear.
std::map<std::string, u128> leaf_inputs(const SpnGraph& spn,
                                        const std::string& cfg_name,
                                        const std::vector<Assignment>& assigned);

enum class TransportKind { InProcess, SocketMesh };

// What a learning session leaves behind: per-party shares of every sum-edge
// weight, keyed by party id and weight id.
struct LearnOutcome {
  std::map<uint16_t, std::map<std::string, StoredValue>> weight_shares;
  std::vector<uint32_t> degenerate;  // sum nodes that fell back to uniform
  TrafficCounters traffic;
  uint64_t total_rows = 0;
};

// Learns the sum-node weights from horizontally split data; parts[k] is the
// local dataset of member k+1 and never leaves that member in the clear.
// Exact mode runs the shared division pipeline and tolerates nodes no row
// ever reached; approximate mode ships one masked rounded share per edge and
// aborts when a member holds a zero local denominator.
LearnOutcome run_learning(const SpnGraph& spn,
                          const std::vector<Dataset>& parts,
                          SessionOptions opts, bool approximate,
                          TransportKind transport);

// The private inputs one member contributes to learning: "st.num.<i>.<j>"
// and "st.den.<i>" per sum node, counted over its local rows. Distributed
// deployments call this per process; run_learning does it for every member.
std::map<std::string, u128> local_statistic_inputs(const SpnGraph& spn,
                                                   const Dataset& data);

// The full learning plan for a session whose members registered total_rows
// rows, after validating scale and fixed-point parameters for the mode.
Plan learning_plan(const SpnGraph& spn, const SessionConfig& cfg,
                   uint64_t total_rows, bool approximate);

// Opens the learned shares into a copy of the structure (debug output and
// tests; a deployment would keep the weights shared).
SpnGraph open_learned_weights(const SpnGraph& spn, const LearnOutcome& out,
                              const SessionConfig& cfg);

// Splits the graph's own public weights into fresh polynomial shares: the
// preload an inference session starts from when no learned model is at hand.
std::map<uint16_t, std::map<std::string, StoredValue>> share_graph_weights(
    const SpnGraph& spn, const SessionConfig& cfg, RandomSource& rng);

struct InferOutcome {
  u128 raw_xe = 0;        // client's opening of the joint root value
  u128 raw_e = 0;         // and of the evidence-only root value
  double estimate = 0.0;  // raw_xe / raw_e
  TrafficCounters traffic;
};

// Private marginal inference against preloaded weight shares, from
// run_learning or a loaded model. Additive shares (approximate learning)
// are converted to polynomial shares inside the session before use. Only
// the client sees the two root openings. Throws DomainError when the
// evidence opens to zero.
InferOutcome run_inference(
    const SpnGraph& spn, const EvidenceQuery& q,
    const std::map<uint16_t, std::map<std::string, StoredValue>>&
        weight_shares,
    SessionOptions opts, TransportKind transport);

}  // namespace spnmpc
