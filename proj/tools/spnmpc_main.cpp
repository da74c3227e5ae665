#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spnmpc/errors.hpp"
#include "spnmpc/model_io.hpp"
#include "spnmpc/protocols.hpp"
#include "spnmpc/spn_io.hpp"

using namespace spnmpc;

namespace {

// Session parameters shared by every command that runs parties. Defaults
// match the reference deployment (23-digit prime, d=256, 16+16 Newton
// iterations); the threshold is derived as (n-1)/2 unless set explicitly.
struct SessionFlags {
  std::string prime = "13558774610046711780701";
  uint64_t scale_d = 256;
  uint64_t precision_e = 1u << 16;
  uint32_t rho = 40;
  uint32_t warmup_iters = 16;
  uint32_t precision_iters = 16;
  uint16_t parties = 0;  // 0 = derive from the partition count
  int threshold = -1;    // -1 = derive as (n-1)/2
  std::string transport = "local";
  double latency_ms = 0.0;
  uint64_t seed = 1;
};

void add_session_flags(CLI::App* cmd, SessionFlags& f,
                       bool with_parties = true) {
  cmd->add_option("--prime", f.prime, "field modulus (decimal)")
      ->capture_default_str();
  cmd->add_option("--scale-d", f.scale_d, "fixed-point scale d")
      ->capture_default_str();
  cmd->add_option("--precision-e", f.precision_e,
                  "precision factor e (power of two)")
      ->capture_default_str();
  cmd->add_option("--rho", f.rho, "mask width in bits")
      ->capture_default_str();
  cmd->add_option("--warmup-iters", f.warmup_iters,
                  "reciprocal warm-up iterations")
      ->capture_default_str();
  cmd->add_option("--precision-iters", f.precision_iters,
                  "reciprocal precision iterations")
      ->capture_default_str();
  if (with_parties)
    cmd->add_option("--parties", f.parties,
                    "member count n (default: one per --data file)");
  cmd->add_option("--threshold", f.threshold,
                  "sharing threshold t (default: (n-1)/2)");
  cmd->add_option("--transport", f.transport, "local or socket")
      ->check(CLI::IsMember({"local", "socket"}))
      ->capture_default_str();
  cmd->add_option("--latency-ms", f.latency_ms,
                  "virtual link latency (local transport)")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "master randomness seed")
      ->capture_default_str();
}

SessionOptions make_options(const SessionFlags& f, uint16_t n) {
  SessionOptions opt;
  opt.cfg.n = n;
  opt.cfg.t = f.threshold >= 0 ? static_cast<uint16_t>(f.threshold)
                               : static_cast<uint16_t>((n - 1) / 2);
  opt.cfg.field = FieldParams(parse_u128(f.prime));
  opt.cfg.fp.d = f.scale_d;
  opt.cfg.fp.e = f.precision_e;
  opt.cfg.fp.rho = f.rho;
  opt.cfg.fp.warmup_iters = f.warmup_iters;
  opt.cfg.fp.precision_iters = f.precision_iters;
  opt.cfg.sharing();  // fail fast on an unusable (n, t, p)
  opt.master_seed = f.seed;
  opt.latency_ms = f.latency_ms;
  return opt;
}

TransportKind transport_kind(const std::string& name) {
  return name == "socket" ? TransportKind::SocketMesh
                          : TransportKind::InProcess;
}

// "w.<node>.<edge>" and nothing else.
bool is_weight_id(const std::string& id) {
  if (id.size() < 5 || id[0] != 'w' || id[1] != '.') return false;
  size_t dot = id.find('.', 2);
  if (dot == std::string::npos || dot == 2 || dot + 1 >= id.size())
    return false;
  for (size_t k = 2; k < id.size(); ++k)
    if (k != dot && (id[k] < '0' || id[k] > '9')) return false;
  return true;
}

std::string label_for(const std::string& structure_path) {
  return std::filesystem::path(structure_path).stem().string();
}

LeafValues pinned_leaves(const SpnGraph& spn,
                         const std::vector<Assignment>& assigned) {
  LeafValues leaves = leaf_values_all_ones(spn);
  for (const Assignment& a : assigned) {
    leaves.pos[a.var] = a.value ? 1.0 : 0.0;
    leaves.neg[a.var] = a.value ? 0.0 : 1.0;
  }
  return leaves;
}

int cmd_validate(const std::string& structure) {
  SpnGraph spn = load_structure(structure);
  StructureStats s = structure_stats(spn);
  std::printf("structure %s\n", structure.c_str());
  std::printf("  variables %u\n", spn.num_vars);
  std::printf("  sum %u, product %u, leaf %u\n", s.sums, s.products,
              s.leaves);
  std::printf("  edges %u, params %u\n", s.edges, s.sum_edges);
  std::printf("  layers %u\n", s.depth + 1);
  std::vector<Violation> violations = validate(spn);
  if (violations.empty()) {
    std::printf("  no violations\n");
    return 0;
  }
  for (const Violation& v : violations)
    std::fprintf(stderr, "node %u: %s\n", v.node, v.message.c_str());
  return 2;
}

struct LearnArgs {
  std::string mode = "exact-mpc";
  std::string structure;
  std::vector<std::string> data_files;
  std::string out;
  bool debug_reconstruct = false;
  SessionFlags session;
};

// Members are the partition files in order; --parties beyond the file count
// adds members that simply hold no rows.
std::vector<Dataset> load_partitions(const LearnArgs& args, uint16_t n,
                                     uint32_t num_vars) {
  if (args.data_files.size() > n)
    throw ConfigError("got " + std::to_string(args.data_files.size()) +
                      " partitions for " + std::to_string(n) + " members");
  std::vector<Dataset> parts;
  for (const std::string& file : args.data_files)
    parts.push_back(load_dataset(file, num_vars));
  while (parts.size() < n) parts.push_back(Dataset{num_vars, {}});
  return parts;
}

int cmd_learn(const LearnArgs& args) {
  SpnGraph spn = load_structure(args.structure);
  if (args.data_files.empty())
    throw ConfigError("learning needs at least one --data partition");

  if (args.mode == "oracle") {
    Dataset merged{spn.num_vars, {}};
    for (const std::string& file : args.data_files) {
      Dataset part = load_dataset(file, spn.num_vars);
      merged.rows.insert(merged.rows.end(), part.rows.begin(),
                         part.rows.end());
    }
    std::vector<uint32_t> degenerate;
    SpnGraph learned = oracle_learn(spn, merged, args.session.scale_d, {},
                                    &degenerate);
    for (uint32_t node : degenerate)
      std::fprintf(stderr, "node %u: no data reached it, uniform weights\n",
                   node);
    for (uint32_t i = 0; i < learned.nodes.size(); ++i) {
      if (learned.nodes[i].kind != NodeKind::Sum) continue;
      for (const auto& edge : learned.nodes[i].edges)
        std::printf("w %u -> %u: %llu\n", i, edge.child,
                    static_cast<unsigned long long>(edge.weight));
    }
    if (!args.out.empty()) {
      save_structure(learned, args.out + ".spn");
      std::printf("wrote %s.spn\n", args.out.c_str());
    }
    return 0;
  }

  bool approximate = args.mode == "approx-mpc";
  uint16_t n = args.session.parties != 0
                   ? args.session.parties
                   : static_cast<uint16_t>(args.data_files.size());
  SessionOptions opt = make_options(args.session, n);
  std::vector<Dataset> parts = load_partitions(args, n, spn.num_vars);
  LearnOutcome outcome = run_learning(spn, parts, opt, approximate,
                                      transport_kind(args.session.transport));
  for (uint32_t node : outcome.degenerate)
    std::fprintf(stderr, "node %u: all local counts zero, uniform weights\n",
                 node);

  std::vector<BenchRow> rows = {{label_for(args.structure), n,
                                 outcome.traffic.messages,
                                 outcome.traffic.bytes,
                                 outcome.traffic.wall_ms}};
  std::printf("%s", format_traffic_table(rows).c_str());

  if (!args.out.empty()) {
    SharedModel model;
    model.structure_file = args.structure;
    model.structure_checksum = file_checksum(args.structure);
    model.prime = opt.cfg.field.modulus();
    model.n = opt.cfg.n;
    model.t = opt.cfg.t;
    model.d = opt.cfg.fp.d;
    model.mode = approximate ? "approximate" : "exact";
    model.degenerate = outcome.degenerate;
    model.shares = outcome.weight_shares;
    save_shared_model(model, args.out);
    write_traffic_json(rows, args.out + ".traffic.json");
    std::printf("wrote %s.model.json and %zu party files\n",
                args.out.c_str(), model.shares.size());
  }

  if (args.debug_reconstruct) {
#ifdef SPNMPC_DEBUG_RECONSTRUCT
    SpnGraph opened = open_learned_weights(spn, outcome, opt.cfg);
    for (uint32_t i = 0; i < opened.nodes.size(); ++i) {
      if (opened.nodes[i].kind != NodeKind::Sum) continue;
      for (size_t j = 0; j < opened.nodes[i].edges.size(); ++j)
        std::printf("reconstructed w.%u.%zu = %llu\n", i, j,
                    static_cast<unsigned long long>(
                        opened.nodes[i].edges[j].weight));
    }
#else
    throw ConfigError(
        "--debug-reconstruct was disabled in this build; rebuild with "
        "-DSPNMPC_DEBUG_RECONSTRUCT=ON");
#endif
  }
  return 0;
}

struct InferArgs {
  std::string model;
  std::string structure;
  std::string query;
  std::string evidence;
  SessionFlags session;
};

int cmd_infer(const InferArgs& args) {
  if (args.model.empty()) {
    // Plaintext path: evaluate the structure's own weights directly.
    SpnGraph spn = load_structure(args.structure);
    EvidenceQuery q;
    q.query = parse_assignments(args.query, spn.num_vars);
    q.evidence = parse_assignments(args.evidence, spn.num_vars);
    check_consistent(q);
    std::vector<Assignment> joint = q.query;
    joint.insert(joint.end(), q.evidence.begin(), q.evidence.end());
    double p_xe = evaluate(spn, pinned_leaves(spn, joint));
    double p_e = evaluate(spn, pinned_leaves(spn, q.evidence));
    if (p_e == 0.0)
      throw DomainError("evidence has probability zero: the conditional "
                        "is undefined");
    std::printf("Pr(x | e) = %.6f\n", p_xe / p_e);
    return 0;
  }

  SharedModel model = load_shared_model(args.model);
  std::string structure_path =
      args.structure.empty() ? model.structure_file : args.structure;
  SpnGraph spn = load_structure(structure_path);

  SessionFlags f = args.session;
  f.prime = to_string(model.prime);
  f.scale_d = model.d;
  f.threshold = model.t;
  SessionOptions opt = make_options(f, model.n);

  EvidenceQuery q;
  q.query = parse_assignments(args.query, spn.num_vars);
  q.evidence = parse_assignments(args.evidence, spn.num_vars);
  InferOutcome out =
      run_inference(spn, q, model.shares, opt,
                    transport_kind(args.session.transport));
  StructureStats s = structure_stats(spn);
  double tolerance =
      2.0 * s.depth / static_cast<double>(model.d);
  std::printf("Pr(x | e) = %.6f\n", out.estimate);
  std::printf("fixed-point scale d=%llu, truncation tolerance +/- %.6f\n",
              static_cast<unsigned long long>(model.d), tolerance);
  return 0;
}

struct BenchArgs {
  std::string structure;
  std::vector<uint16_t> parties = {3, 5};
  uint64_t rows = 32;
  std::string mode = "exact-mpc";
  std::string out;
  SessionFlags session;
};

int cmd_bench(const BenchArgs& args) {
  SpnGraph spn = load_structure(args.structure);
  bool approximate = args.mode == "approx-mpc";

  // One fixed dataset for every party count, so rows only move between
  // members and the message growth isolates n.
  SeededRandom rng(args.session.seed);
  Dataset data{spn.num_vars, {}};
  for (uint64_t r = 0; r < args.rows; ++r) {
    std::vector<uint8_t> row;
    for (uint32_t v = 0; v < spn.num_vars; ++v)
      row.push_back(static_cast<uint8_t>(sample_bounded(2, rng)));
    data.rows.push_back(std::move(row));
  }

  std::vector<BenchRow> report;
  for (uint16_t n : args.parties) {
    std::vector<Dataset> parts(n, Dataset{spn.num_vars, {}});
    for (size_t r = 0; r < data.rows.size(); ++r)
      parts[r % n].rows.push_back(data.rows[r]);
    SessionOptions opt = make_options(args.session, n);
    LearnOutcome outcome =
        run_learning(spn, parts, opt, approximate,
                     transport_kind(args.session.transport));
    report.push_back({label_for(args.structure), n,
                      outcome.traffic.messages, outcome.traffic.bytes,
                      outcome.traffic.wall_ms});
  }
  std::printf("%s", format_traffic_table(report).c_str());
  if (!args.out.empty()) {
    write_traffic_json(report, args.out);
    std::printf("wrote %s\n", args.out.c_str());
  }
  return 0;
}

struct PartyArgs {
  std::string session_file;
  uint16_t id = 0;
  std::string structure;
  std::string data;
  std::string mode = "exact-mpc";
  std::string out;
};

// One party of a distributed learning session. Every process loads the same
// manifest; the manager (id 0) builds the plan once registrations reveal the
// row total, members contribute their partition's statistics.
int cmd_party(const PartyArgs& args) {
  SessionManifest manifest = load_session_manifest(args.session_file);
  SpnGraph spn = load_structure(args.structure);
  bool approximate = args.mode == "approx-mpc";

  SessionOptions opt;
  opt.cfg = manifest.cfg;
  opt.master_seed = manifest.seed;
  opt.timeout_ms = manifest.timeout_ms;

  if (args.id == 0) {
    auto factory = [&](uint64_t total_rows) {
      return learning_plan(spn, opt.cfg, total_rows, approximate);
    };
    auto started = std::chrono::steady_clock::now();
    SocketPartyResult res =
        run_socket_manager(opt.cfg, manifest.endpoints, -1, factory,
                           opt.make_rng(0), opt.timeout_ms);
    double elapsed = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    if (res.aborted)
      throw ProtocolError("session aborted: " + res.abort_reason);
    for (const auto& [poll, all_zero] : res.polls)
      if (all_zero)
        std::fprintf(stderr, "%s: all local counts zero\n", poll.c_str());
    std::vector<BenchRow> rows = {{label_for(args.structure), opt.cfg.n,
                                   res.counters.messages, res.counters.bytes,
                                   elapsed}};
    std::printf("%s", format_traffic_table(rows).c_str());
    if (!args.out.empty())
      write_traffic_json(rows, args.out + ".traffic.json");
    return 0;
  }

  if (args.id > opt.cfg.n)
    throw ConfigError("party id " + std::to_string(args.id) +
                      " exceeds the member count " +
                      std::to_string(opt.cfg.n));
  if (args.data.empty())
    throw ConfigError("members need a --data partition");
  Dataset data = load_dataset(args.data, spn.num_vars);
  SocketPartyResult res = run_socket_member(
      opt.cfg, args.id, manifest.endpoints, -1, opt.make_rng(args.id),
      data.rows.size(), local_statistic_inputs(spn, data), {},
      opt.timeout_ms);
  if (res.aborted)
    throw ProtocolError("session aborted: " + res.abort_reason);

  std::map<std::string, StoredValue> weights;
  for (const auto& [id, stored] : res.store)
    if (is_weight_id(id)) weights[id] = stored;
  if (!args.out.empty()) {
    std::string path =
        args.out + ".party" + std::to_string(args.id) + ".json";
    save_party_shares(args.id, weights, path);
    std::printf("wrote %s (%zu weight shares)\n", path.c_str(),
                weights.size());
  } else {
    std::printf("holding %zu weight shares\n", weights.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"secure multiparty weight learning and marginal inference "
               "for sum-product networks"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "option defaults in INI form; explicit flags win");

  int rc = 0;

  auto* validate_cmd =
      app.add_subcommand("validate", "check a structure file and report "
                                     "its shape");
  std::string validate_structure;
  validate_cmd->add_option("--structure", validate_structure, "structure file")
      ->required();
  validate_cmd->callback(
      [&] { rc = cmd_validate(validate_structure); });

  auto* learn_cmd =
      app.add_subcommand("learn", "learn sum-node weights from partitioned "
                                  "data");
  LearnArgs learn_args;
  learn_cmd->add_option("--mode", learn_args.mode,
                        "oracle, exact-mpc or approx-mpc")
      ->check(CLI::IsMember({"oracle", "exact-mpc", "approx-mpc"}))
      ->capture_default_str();
  learn_cmd->add_option("--structure", learn_args.structure, "structure file")
      ->required();
  learn_cmd->add_option("--data", learn_args.data_files,
                        "partition file, one per member (repeatable)");
  learn_cmd->add_option("--out", learn_args.out, "output path prefix");
  learn_cmd->add_flag("--debug-reconstruct", learn_args.debug_reconstruct,
                      "open the learned shares and print the weights");
  add_session_flags(learn_cmd, learn_args.session);
  learn_cmd->callback([&] { rc = cmd_learn(learn_args); });

  auto* infer_cmd =
      app.add_subcommand("infer", "answer Pr(x | e) against a model");
  InferArgs infer_args;
  infer_cmd->add_option("--model", infer_args.model,
                        "shared model manifest (omit for plaintext)");
  infer_cmd->add_option("--structure", infer_args.structure,
                        "structure file (plaintext model, or override)");
  infer_cmd->add_option("--query", infer_args.query,
                        "comma-separated var=value pairs")
      ->required();
  infer_cmd->add_option("--evidence", infer_args.evidence,
                        "comma-separated var=value pairs");
  add_session_flags(infer_cmd, infer_args.session);
  infer_cmd->callback([&] { rc = cmd_infer(infer_args); });

  auto* bench_cmd =
      app.add_subcommand("bench", "measure learning traffic across party "
                                  "counts");
  BenchArgs bench_args;
  bench_cmd->add_option("--structure", bench_args.structure, "structure file")
      ->required();
  bench_cmd->add_option("--parties", bench_args.parties,
                        "party counts to sweep (repeatable)")
      ->capture_default_str();
  bench_cmd->add_option("--rows", bench_args.rows, "synthetic dataset rows")
      ->capture_default_str();
  bench_cmd->add_option("--mode", bench_args.mode,
                        "exact-mpc or approx-mpc")
      ->check(CLI::IsMember({"exact-mpc", "approx-mpc"}))
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_args.out, "traffic report JSON path");
  add_session_flags(bench_cmd, bench_args.session, /*with_parties=*/false);
  bench_cmd->callback([&] { rc = cmd_bench(bench_args); });

  auto* party_cmd =
      app.add_subcommand("party", "run one party of a distributed socket "
                                  "session");
  PartyArgs party_args;
  party_cmd->add_option("--session", party_args.session_file,
                        "session manifest file")
      ->required();
  party_cmd->add_option("--id", party_args.id,
                        "party id (0 = manager, 1..n = members)")
      ->required();
  party_cmd->add_option("--structure", party_args.structure,
                        "structure file")
      ->required();
  party_cmd->add_option("--data", party_args.data, "this member's partition");
  party_cmd->add_option("--mode", party_args.mode,
                        "exact-mpc or approx-mpc")
      ->check(CLI::IsMember({"exact-mpc", "approx-mpc"}))
      ->capture_default_str();
  party_cmd->add_option("--out", party_args.out, "output path prefix");
  party_cmd->callback([&] { rc = cmd_party(party_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConnectivityError& e) {
    std::fprintf(stderr, "connectivity error: %s\n", e.what());
    return 4;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "undefined result: %s\n", e.what());
    return 5;
  } catch (const ProtocolError& e) {
    std::fprintf(stderr, "protocol error: %s\n", e.what());
    return 3;
  } catch (const RandomnessError& e) {
    std::fprintf(stderr, "randomness error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return rc;
}
