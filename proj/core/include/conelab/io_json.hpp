#pragma once

#include "conelab/operator_core.hpp"

#include <string>

namespace conelab {

// On-disk operator format:
//   {"dims": [{"label": "A", "dim": 2}, ...],
//    "matrix": [[[re, im], ...], ...]}            (row-major)
// A legacy form with "dims": [2, 3, ...] is accepted; factors then get
// synthetic labels S0, S1, ... and a warning goes to stderr.
HermitianOperator parse_operator_json(const std::string& text);
HermitianOperator read_operator_file(const std::string& path);
std::string operator_to_json(const HermitianOperator& op);
void write_operator_file(const std::string& path, const HermitianOperator& op);

ChoiOperator read_choi_file(const std::string& path, int in_factor_count);

}  // namespace conelab
