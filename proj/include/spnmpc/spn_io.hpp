#pragma once

#include <string>

#include "spnmpc/spn.hpp"

namespace spnmpc {

// Structure files are line oriented:
//
//   spn 1
//   vars 2
//   scale 1000
//   node 0 leaf 0 +
//   node 1 leaf 0 -
//   node 4 sum 0:300 1:700
//   node 8 prod 4 6
//   root 8
//
// Full-line # comments and blank lines are skipped. Node ids must cover
// 0..count-1 exactly once; the root line closes the file. Loading validates
// the structure and throws DomainError on a violation, ParseError on syntax.
SpnGraph load_structure(const std::string& path);
void save_structure(const SpnGraph& spn, const std::string& path);

// Dataset files carry a "spn-dataset 1" header line followed by one
// comma-separated binary row per line. expected_vars 0 infers the width from
// the first row; a nonzero value is enforced.
Dataset load_dataset(const std::string& path, uint32_t expected_vars = 0);
void save_dataset(const Dataset& data, const std::string& path);

}  // namespace spnmpc
