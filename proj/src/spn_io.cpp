#include "spnmpc/spn_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "spnmpc/errors.hpp"

namespace spnmpc {

namespace {

[[noreturn]] void fail(const std::string& path, size_t line,
                       const std::string& message) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + message);
}

uint64_t parse_u64(const std::string& token, const std::string& path,
                   size_t line, const char* what) {
  uint64_t value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    fail(path, line, std::string("bad ") + what + " '" + token + "'");
  }
  return value;
}

// Content lines of the file with their 1-based numbers, comments and blanks
// dropped.
std::vector<std::pair<size_t, std::string>> content_lines(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::pair<size_t, std::string>> out;
  std::string line;
  size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    size_t stop = line.find_last_not_of(" \t\r");
    out.emplace_back(no, line.substr(start, stop - start + 1));
  }
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> tokens;
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

}  // namespace

SpnGraph load_structure(const std::string& path) {
  auto lines = content_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty structure file");
  size_t at = 0;
  auto expect_pair = [&](const char* key) -> std::string {
    if (at >= lines.size()) {
      fail(path, lines.back().first, std::string("missing '") + key + "' line");
    }
    auto [no, text] = lines[at];
    std::vector<std::string> tokens = split_ws(text);
    if (tokens.size() != 2 || tokens[0] != key) {
      fail(path, no, std::string("expected '") + key + " <value>'");
    }
    ++at;
    return tokens[1];
  };
  if (expect_pair("spn") != "1") {
    fail(path, lines[0].first, "unsupported structure version");
  }
  SpnGraph spn;
  spn.num_vars = static_cast<uint32_t>(
      parse_u64(expect_pair("vars"), path, lines[at - 1].first, "vars"));
  spn.scale = parse_u64(expect_pair("scale"), path, lines[at - 1].first,
                        "scale");
  if (spn.scale < 2) fail(path, lines[at - 1].first, "scale must be >= 2");

  struct Pending {
    size_t line;
    uint32_t id;
    SpnNode node;
  };
  std::vector<Pending> pending;
  bool have_root = false;
  for (; at < lines.size(); ++at) {
    auto [no, text] = lines[at];
    std::vector<std::string> tokens = split_ws(text);
    if (tokens[0] == "root") {
      if (tokens.size() != 2) fail(path, no, "expected 'root <id>'");
      spn.root = static_cast<uint32_t>(
          parse_u64(tokens[1], path, no, "root id"));
      have_root = true;
      if (at + 1 != lines.size()) {
        fail(path, lines[at + 1].first, "content after root line");
      }
      continue;
    }
    if (tokens[0] != "node" || tokens.size() < 3) {
      fail(path, no, "expected 'node <id> <kind> ...'");
    }
    Pending p;
    p.line = no;
    p.id = static_cast<uint32_t>(parse_u64(tokens[1], path, no, "node id"));
    const std::string& kind = tokens[2];
    if (kind == "leaf") {
      if (tokens.size() != 5 || (tokens[4] != "+" && tokens[4] != "-")) {
        fail(path, no, "expected 'node <id> leaf <var> +|-'");
      }
      p.node.kind = NodeKind::Leaf;
      p.node.var = static_cast<uint32_t>(
          parse_u64(tokens[3], path, no, "leaf variable"));
      p.node.negated = tokens[4] == "-";
    } else if (kind == "prod") {
      if (tokens.size() < 4) fail(path, no, "product node needs children");
      p.node.kind = NodeKind::Product;
      for (size_t k = 3; k < tokens.size(); ++k) {
        p.node.children.push_back(static_cast<uint32_t>(
            parse_u64(tokens[k], path, no, "child id")));
      }
    } else if (kind == "sum") {
      if (tokens.size() < 4) fail(path, no, "sum node needs children");
      p.node.kind = NodeKind::Sum;
      for (size_t k = 3; k < tokens.size(); ++k) {
        size_t colon = tokens[k].find(':');
        if (colon == std::string::npos || colon == 0 ||
            colon + 1 == tokens[k].size()) {
          fail(path, no, "expected '<child>:<weight>', got '" + tokens[k] +
                             "'");
        }
        SumEdge edge;
        edge.child = static_cast<uint32_t>(parse_u64(
            tokens[k].substr(0, colon), path, no, "child id"));
        edge.weight = parse_u64(tokens[k].substr(colon + 1), path, no,
                                "edge weight");
        p.node.edges.push_back(edge);
      }
    } else {
      fail(path, no, "unknown node kind '" + kind + "'");
    }
    pending.push_back(std::move(p));
  }
  if (!have_root) throw ParseError(path + ": missing root line");
  spn.nodes.resize(pending.size());
  std::vector<uint8_t> declared(pending.size(), 0);
  for (Pending& p : pending) {
    if (p.id >= pending.size()) {
      fail(path, p.line, "node id " + std::to_string(p.id) +
                             " outside 0.." +
                             std::to_string(pending.size() - 1));
    }
    if (declared[p.id]) {
      fail(path, p.line, "node id " + std::to_string(p.id) +
                             " declared twice");
    }
    declared[p.id] = 1;
    spn.nodes[p.id] = std::move(p.node);
  }

  compute_scopes(spn);
  std::vector<Violation> bad = validate(spn);
  if (!bad.empty()) {
    throw DomainError(path + ": structure invalid: node " +
                      std::to_string(bad[0].node) + ": " + bad[0].message +
                      (bad.size() > 1
                           ? " (+" + std::to_string(bad.size() - 1) + " more)"
                           : ""));
  }
  return spn;
}

void save_structure(const SpnGraph& spn, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "spn 1\n";
  out << "vars " << spn.num_vars << "\n";
  out << "scale " << spn.scale << "\n";
  for (uint32_t i = 0; i < spn.nodes.size(); ++i) {
    const SpnNode& node = spn.nodes[i];
    switch (node.kind) {
      case NodeKind::Leaf:
        out << "node " << i << " leaf " << node.var
            << (node.negated ? " -" : " +") << "\n";
        break;
      case NodeKind::Product:
        out << "node " << i << " prod";
        for (uint32_t c : node.children) out << " " << c;
        out << "\n";
        break;
      case NodeKind::Sum:
        out << "node " << i << " sum";
        for (const SumEdge& e : node.edges) {
          out << " " << e.child << ":" << e.weight;
        }
        out << "\n";
        break;
    }
  }
  out << "root " << spn.root << "\n";
  if (!out) throw ParseError("write failed for " + path);
}

Dataset load_dataset(const std::string& path, uint32_t expected_vars) {
  auto lines = content_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty dataset file");
  {
    auto [no, text] = lines[0];
    std::vector<std::string> tokens = split_ws(text);
    if (tokens.size() != 2 || tokens[0] != "spn-dataset" || tokens[1] != "1") {
      fail(path, no, "expected 'spn-dataset 1' header");
    }
  }
  Dataset data;
  data.num_vars = expected_vars;
  for (size_t at = 1; at < lines.size(); ++at) {
    auto [no, text] = lines[at];
    std::vector<uint8_t> row;
    size_t start = 0;
    while (start <= text.size()) {
      size_t comma = text.find(',', start);
      std::string cell = text.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start);
      size_t a = cell.find_first_not_of(" \t");
      size_t b = cell.find_last_not_of(" \t");
      if (a == std::string::npos) fail(path, no, "empty cell");
      cell = cell.substr(a, b - a + 1);
      if (cell == "0") {
        row.push_back(0);
      } else if (cell == "1") {
        row.push_back(1);
      } else {
        fail(path, no, "cell '" + cell + "' is not 0 or 1");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (data.num_vars == 0) data.num_vars = static_cast<uint32_t>(row.size());
    if (row.size() != data.num_vars) {
      fail(path, no, "row has " + std::to_string(row.size()) +
                         " values, want " + std::to_string(data.num_vars));
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "spn-dataset 1\n";
  for (const std::vector<uint8_t>& row : data.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << static_cast<int>(row[i]);
    }
    out << "\n";
  }
  if (!out) throw ParseError("write failed for " + path);
}

}  // namespace spnmpc
