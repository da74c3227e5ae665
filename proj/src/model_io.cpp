#include "spnmpc/model_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spnmpc/errors.hpp"

namespace spnmpc {

namespace {

using nlohmann::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw ParseError("write failed on " + path);
}

// json::at with the file name folded into the error, since nlohmann's own
// message only names the missing key.
template <typename T>
T field(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

const char* kind_token(ValueKind kind) {
  switch (kind) {
    case ValueKind::Public:
      return "public";
    case ValueKind::PolyShare:
      return "poly";
    case ValueKind::AddShare:
      return "add";
  }
  return "?";
}

ValueKind parse_kind(const std::string& token, const std::string& path) {
  if (token == "public") return ValueKind::Public;
  if (token == "poly") return ValueKind::PolyShare;
  if (token == "add") return ValueKind::AddShare;
  throw ParseError(path + ": unknown share kind '" + token + "'");
}

std::string party_file_name(const std::string& prefix, uint16_t id) {
  return prefix + ".party" + std::to_string(id) + ".json";
}

// The structure path in a manifest may be relative to where the model was
// saved; try it as written first, then next to the manifest.
std::string resolve_near(const std::string& recorded,
                         const std::string& manifest_path) {
  namespace fs = std::filesystem;
  if (fs::exists(recorded)) return recorded;
  fs::path near = fs::path(manifest_path).parent_path() /
                  fs::path(recorded).filename();
  if (fs::exists(near)) return near.string();
  return {};
}

}  // namespace

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  uint64_t hash = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    hash ^= static_cast<uint8_t>(c);
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

void save_party_shares(uint16_t id,
                       const std::map<std::string, StoredValue>& shares,
                       const std::string& path) {
  json body;
  body["party"] = id;
  json entries = json::object();
  for (const auto& [wid, stored] : shares) {
    entries[wid] = {{"kind", kind_token(stored.kind)},
                    {"value", to_string(stored.value)}};
  }
  body["shares"] = std::move(entries);
  write_json(body, path);
}

void save_shared_model(const SharedModel& model, const std::string& prefix) {
  json manifest;
  manifest["format"] = "spnmpc-model";
  manifest["version"] = 1;
  manifest["structure"] = model.structure_file;
  manifest["structure_checksum"] = model.structure_checksum;
  manifest["prime"] = to_string(model.prime);
  manifest["n"] = model.n;
  manifest["t"] = model.t;
  manifest["d"] = model.d;
  manifest["mode"] = model.mode;
  manifest["degenerate"] = model.degenerate;

  json parties = json::array();
  for (const auto& [id, shares] : model.shares) {
    std::string file = party_file_name(prefix, id);
    save_party_shares(id, shares, file);
    parties.push_back({{"id", id},
                       {"file", std::filesystem::path(file)
                                    .filename()
                                    .string()}});
  }
  manifest["parties"] = std::move(parties);
  write_json(manifest, prefix + ".model.json");
}

SharedModel load_shared_model(const std::string& manifest_path) {
  json manifest = read_json(manifest_path);
  if (field<std::string>(manifest, "format", manifest_path) != "spnmpc-model")
    throw ParseError(manifest_path + ": not a shared model manifest");

  SharedModel model;
  model.structure_file = field<std::string>(manifest, "structure",
                                            manifest_path);
  model.structure_checksum = field<std::string>(manifest,
                                                "structure_checksum",
                                                manifest_path);
  model.prime = parse_u128(field<std::string>(manifest, "prime",
                                              manifest_path));
  model.n = field<uint16_t>(manifest, "n", manifest_path);
  model.t = field<uint16_t>(manifest, "t", manifest_path);
  model.d = field<uint64_t>(manifest, "d", manifest_path);
  model.mode = field<std::string>(manifest, "mode", manifest_path);
  model.degenerate = field<std::vector<uint32_t>>(manifest, "degenerate",
                                                  manifest_path);

  std::string structure = resolve_near(model.structure_file, manifest_path);
  if (!structure.empty()) {
    std::string sum = file_checksum(structure);
    if (sum != model.structure_checksum)
      throw ParseError(structure + ": checksum " + sum +
                       " does not match the model manifest (" +
                       model.structure_checksum + ")");
    model.structure_file = structure;
  }

  namespace fs = std::filesystem;
  fs::path dir = fs::path(manifest_path).parent_path();
  for (const json& entry : field<json>(manifest, "parties", manifest_path)) {
    auto id = field<uint16_t>(entry, "id", manifest_path);
    auto file = field<std::string>(entry, "file", manifest_path);
    std::string path = (dir / file).string();
    json body = read_json(path);
    if (field<uint16_t>(body, "party", path) != id)
      throw ParseError(path + ": party id does not match the manifest");
    std::map<std::string, StoredValue> shares;
    json entries = field<json>(body, "shares", path);
    for (const auto& [wid, val] : entries.items()) {
      StoredValue stored;
      stored.kind = parse_kind(field<std::string>(val, "kind", path), path);
      stored.value = parse_u128(field<std::string>(val, "value", path));
      shares[wid] = stored;
    }
    model.shares[id] = std::move(shares);
  }
  return model;
}

std::string format_traffic_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "label            n    messages        bytes      wall-ms"
         "    msg-ratio   (n2/n1)^2\n";
  std::map<std::string, const BenchRow*> previous;
  for (const BenchRow& row : rows) {
    char line[160];
    const BenchRow* prev = previous[row.label];
    if (prev != nullptr && prev->messages > 0 && prev->n > 0) {
      double ratio = static_cast<double>(row.messages) / prev->messages;
      double square = static_cast<double>(row.n) * row.n /
                      (static_cast<double>(prev->n) * prev->n);
      std::snprintf(line, sizeof line,
                    "%-14s %3u %11llu %12llu %12.1f %12.2f %11.2f\n",
                    row.label.c_str(), row.n,
                    static_cast<unsigned long long>(row.messages),
                    static_cast<unsigned long long>(row.bytes), row.wall_ms,
                    ratio, square);
    } else {
      std::snprintf(line, sizeof line,
                    "%-14s %3u %11llu %12llu %12.1f %12s %11s\n",
                    row.label.c_str(), row.n,
                    static_cast<unsigned long long>(row.messages),
                    static_cast<unsigned long long>(row.bytes), row.wall_ms,
                    "-", "-");
    }
    out << line;
    previous[row.label] = &row;
  }
  return out.str();
}

void write_traffic_json(const std::vector<BenchRow>& rows,
                        const std::string& path) {
  json body = json::array();
  std::map<std::string, const BenchRow*> previous;
  for (const BenchRow& row : rows) {
    json entry;
    entry["label"] = row.label;
    entry["n"] = row.n;
    entry["messages"] = row.messages;
    entry["bytes"] = row.bytes;
    entry["wall_ms"] = row.wall_ms;
    const BenchRow* prev = previous[row.label];
    if (prev != nullptr && prev->messages > 0 && prev->n > 0) {
      entry["message_ratio"] =
          static_cast<double>(row.messages) / prev->messages;
      entry["square_law"] = static_cast<double>(row.n) * row.n /
                            (static_cast<double>(prev->n) * prev->n);
    }
    body.push_back(std::move(entry));
    previous[row.label] = &row;
  }
  write_json(body, path);
}

SessionManifest load_session_manifest(const std::string& path) {
  json j = read_json(path);
  SessionManifest m;
  m.cfg.session_id = field<uint64_t>(j, "session_id", path);
  m.cfg.n = field<uint16_t>(j, "n", path);
  m.cfg.t = field<uint16_t>(j, "t", path);
  m.cfg.field = FieldParams(parse_u128(field<std::string>(j, "prime", path)));
  m.cfg.fp.d = field<uint64_t>(j, "d", path);
  m.cfg.fp.e = field<uint64_t>(j, "e", path);
  m.cfg.fp.rho = field<uint32_t>(j, "rho", path);
  if (j.contains("warmup_iters"))
    m.cfg.fp.warmup_iters = field<uint32_t>(j, "warmup_iters", path);
  if (j.contains("precision_iters"))
    m.cfg.fp.precision_iters = field<uint32_t>(j, "precision_iters", path);
  m.cfg.with_client = j.value("with_client", false);
  m.seed = field<uint64_t>(j, "seed", path);
  m.latency_ms = j.value("latency_ms", 0.0);
  m.timeout_ms = j.value("timeout_ms", 30000.0);
  for (const json& entry : field<json>(j, "endpoints", path)) {
    auto id = field<uint16_t>(entry, "id", path);
    auto host = field<std::string>(entry, "host", path);
    auto port = field<uint16_t>(entry, "port", path);
    m.endpoints.addr[id] = {host, port};
  }
  return m;
}

void save_session_manifest(const SessionManifest& manifest,
                           const std::string& path) {
  json j;
  j["session_id"] = manifest.cfg.session_id;
  j["n"] = manifest.cfg.n;
  j["t"] = manifest.cfg.t;
  j["prime"] = to_string(manifest.cfg.field.modulus());
  j["d"] = manifest.cfg.fp.d;
  j["e"] = manifest.cfg.fp.e;
  j["rho"] = manifest.cfg.fp.rho;
  j["warmup_iters"] = manifest.cfg.fp.warmup_iters;
  j["precision_iters"] = manifest.cfg.fp.precision_iters;
  j["with_client"] = manifest.cfg.with_client;
  j["seed"] = manifest.seed;
  j["latency_ms"] = manifest.latency_ms;
  j["timeout_ms"] = manifest.timeout_ms;
  json endpoints = json::array();
  for (const auto& [id, hp] : manifest.endpoints.addr) {
    endpoints.push_back(
        {{"id", id}, {"host", hp.first}, {"port", hp.second}});
  }
  j["endpoints"] = std::move(endpoints);
  write_json(j, path);
}

}  // namespace spnmpc
