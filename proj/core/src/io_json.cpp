#include "conelab/io_json.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace conelab {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

int line_of_byte(const std::string& text, size_t byte) {
  size_t end = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + end, '\n'));
}

Complex parse_entry(const json& e) {
  if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
    fail("operator json: matrix entries must be [re, im] number pairs");
  return Complex(e[0].get<double>(), e[1].get<double>());
}

}  // namespace

HermitianOperator parse_operator_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << "operator json: parse error near line " << line_of_byte(text, e.byte) << ": "
       << e.what();
    fail(os.str());
  }
  if (!doc.is_object() || !doc.contains("dims") || !doc.contains("matrix"))
    fail("operator json: expected an object with 'dims' and 'matrix'");

  const json& jd = doc["dims"];
  if (!jd.is_array() || jd.empty()) fail("operator json: 'dims' must be a non-empty array");
  std::vector<Factor> factors;
  bool legacy = jd[0].is_number_integer();
  for (size_t i = 0; i < jd.size(); ++i) {
    const json& f = jd[i];
    if (legacy) {
      if (!f.is_number_integer())
        fail("operator json: 'dims' mixes integers and objects");
      factors.push_back({"S" + std::to_string(i), f.get<int>()});
    } else {
      if (!f.is_object() || !f.contains("label") || !f.contains("dim") ||
          !f["label"].is_string() || !f["dim"].is_number_integer())
        fail("operator json: each dims entry needs a string 'label' and integer 'dim'");
      factors.push_back({f["label"].get<std::string>(), f["dim"].get<int>()});
    }
  }
  if (legacy)
    std::cerr << "warning: operator json uses bare integer dims; assigning labels S0..S"
              << factors.size() - 1 << "\n";
  DimProfile profile(factors);
  long long n = profile.total_dim();

  const json& jm = doc["matrix"];
  if (!jm.is_array() || static_cast<long long>(jm.size()) != n)
    fail("operator json: 'matrix' must have " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (long long r = 0; r < n; ++r) {
    const json& row = jm[static_cast<size_t>(r)];
    if (!row.is_array() || static_cast<long long>(row.size()) != n)
      fail("operator json: row " + std::to_string(r) + " must have " + std::to_string(n) +
           " entries");
    for (long long c = 0; c < n; ++c) m(r, c) = parse_entry(row[static_cast<size_t>(c)]);
  }
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 1e-9 * scale) {
    std::ostringstream os;
    os << "operator json: matrix is not Hermitian (deviation " << dev << ")";
    fail(os.str());
  }
  return HermitianOperator(profile, m);
}

HermitianOperator read_operator_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open operator file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_operator_json(buf.str());
  } catch (const std::runtime_error& e) {
    fail(path + ": " + e.what());
  }
}

std::string operator_to_json(const HermitianOperator& op) {
  json doc;
  json dims = json::array();
  for (const Factor& f : op.dims().factors())
    dims.push_back(json{{"label", f.label}, {"dim", f.dim}});
  doc["dims"] = std::move(dims);
  json rows = json::array();
  const Matrix& m = op.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  doc["matrix"] = std::move(rows);
  return doc.dump(2) + "\n";
}

void write_operator_file(const std::string& path, const HermitianOperator& op) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open operator file for writing: " + path);
  out << operator_to_json(op);
  if (!out) fail("failed writing operator file: " + path);
}

ChoiOperator read_choi_file(const std::string& path, int in_factor_count) {
  return choi_from_operator(read_operator_file(path), in_factor_count);
}

}  // namespace conelab
