#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spnmpc/party.hpp"
#include "spnmpc/transport_socket.hpp"

namespace spnmpc {

// A learned shared model on disk: one manifest naming the structure file and
// the session parameters, plus one share file per party so no single file
// ever holds enough to reconstruct a weight. Plaintext (oracle-learned)
// models need none of this; they are ordinary structure files with the
// weights baked into the sum edges.
struct SharedModel {
  std::string structure_file;
  std::string structure_checksum;
  u128 prime = 0;
  uint16_t n = 0;
  uint16_t t = 0;
  uint64_t d = 0;
  std::string mode;  // "exact" or "approximate"
  std::vector<uint32_t> degenerate;
  std::map<uint16_t, std::map<std::string, StoredValue>> shares;
};

// Writes <prefix>.model.json and one <prefix>.party<k>.json per party.
// Party files are referenced by bare filename, so the set can be moved as a
// directory. Throws ParseError on unwritable paths.
void save_shared_model(const SharedModel& model, const std::string& prefix);

// Loads a manifest and every party file it references (resolved relative to
// the manifest's directory). The structure checksum is re-verified when the
// structure file is still reachable; a mismatch is a ParseError.
SharedModel load_shared_model(const std::string& manifest_path);

// Writes one party's share records in the same format save_shared_model
// uses, for distributed runs where each process holds a single party. The
// files can then be gathered next to a manifest and loaded as one model.
void save_party_shares(uint16_t id,
                       const std::map<std::string, StoredValue>& shares,
                       const std::string& path);

// FNV-1a over the raw file bytes, rendered as 16 hex digits. Not
// cryptographic; it only catches a structure file drifting out from under a
// saved model.
std::string file_checksum(const std::string& path);

// One benchmark measurement. label distinguishes datasets or plan shapes
// when several sweeps share a report.
struct BenchRow {
  std::string label;
  uint16_t n = 0;
  uint64_t messages = 0;
  uint64_t bytes = 0;
  double wall_ms = 0.0;
};

// Text table with one row per measurement. Rows sharing a label get a ratio
// column against the previous row of that label: observed message growth
// next to the (n2/n1)^2 square-law reference.
std::string format_traffic_table(const std::vector<BenchRow>& rows);

// Machine-readable twin of the table, including the same ratios.
void write_traffic_json(const std::vector<BenchRow>& rows,
                        const std::string& path);

// Session manifest for distributed socket runs: every process loads the
// same file and plays the party named on its command line.
struct SessionManifest {
  SessionConfig cfg;
  uint64_t seed = 1;
  double latency_ms = 0.0;
  double timeout_ms = 30000.0;
  SocketEndpoints endpoints;
};

SessionManifest load_session_manifest(const std::string& path);
void save_session_manifest(const SessionManifest& manifest,
                           const std::string& path);

}  // namespace spnmpc
