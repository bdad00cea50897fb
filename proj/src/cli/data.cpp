#include "mgof/cli/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace mgof::cli {

namespace {

struct Row {
  int line = 0;
  std::vector<double> values;
};

bool parse_number(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= line.size(); ++k) {
    if (k == line.size() || line[k] == ',') {
      out.push_back(line.substr(start, k - start));
      start = k + 1;
    }
  }
  return out;
}

std::vector<Row> read_rows(const std::string& text, const std::string& source) {
  std::vector<Row> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split(line);
    Row row{lineno, {}};
    row.values.resize(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (!parse_number(fields[k], row.values[k])) {
        if (rows.empty() && k == 0 && width == 0) {
          numeric = false;
          break;
        }
        throw DataError(source + ":" + std::to_string(lineno) + ": field " + std::to_string(k + 1) +
                        " is not a finite number");
      }
    }
    if (!numeric) {
      width = fields.size();  // header
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw DataError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) +
                      " fields, found " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(source + ": no data rows");
  return rows;
}

class Checker {
 public:
  explicit Checker(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const Row& r, const std::string& msg) const {
    throw DataError(source_ + ":" + std::to_string(r.line) + ": " + msg);
  }

  void expect_width(const Row& r, std::size_t width, const char* layout) const {
    if (r.values.size() != width) {
      fail(r, "expected " + std::to_string(width) + " columns (" + layout + "), found " +
                  std::to_string(r.values.size()));
    }
  }

  Index index(const Row& r, std::size_t col, Index bound, const char* name) const {
    const double v = r.values[col];
    if (v != std::floor(v) || v < 0 || v >= static_cast<double>(bound)) {
      fail(r, std::string(name) + " must be an integer in [0, " + std::to_string(bound) + ")");
    }
    return static_cast<Index>(v);
  }

 private:
  std::string source_;
};

}  // namespace

LoadedData parse_data(const ExperimentConfig& cfg, const std::string& text,
                      const std::string& source) {
  const std::vector<Row> rows = read_rows(text, source);
  const Checker ck(source);
  const Index n = static_cast<Index>(rows.size());
  LoadedData out;
  switch (cfg.family) {
    case FamilyKind::kRealMatrix:
    case FamilyKind::kComplexMatrix: {
      const bool cplx = cfg.family == FamilyKind::kComplexMatrix;
      MatrixIndexSet omega;
      std::set<std::pair<Index, Index>> seen;
      out.y.resize(cplx ? 2 * n : n);
      for (Index k = 0; k < n; ++k) {
        const Row& r = rows[k];
        ck.expect_width(r, cplx ? 4 : 3, cplx ? "i,j,value,value_imag" : "i,j,value");
        const MatrixEntry e{ck.index(r, 0, cfg.n1, "i"), ck.index(r, 1, cfg.n2, "j")};
        if (!seen.insert({e.i, e.j}).second) ck.fail(r, "repeated entry");
        omega.push_back(e);
        out.y[k] = r.values[2];
        if (cplx) out.y[n + k] = r.values[3];
      }
      out.family = make_matrix_family(cfg.n1, cfg.n2, std::move(omega),
                                      cplx ? Field::kComplex : Field::kReal);
      break;
    }
    case FamilyKind::kTensor: {
      TensorIndexSet omega;
      std::set<std::tuple<Index, Index, Index>> seen;
      out.y.resize(n);
      for (Index k = 0; k < n; ++k) {
        const Row& r = rows[k];
        ck.expect_width(r, 4, "i,j,l,value");
        const TensorEntry e{ck.index(r, 0, cfg.n1, "i"), ck.index(r, 1, cfg.n2, "j"),
                            ck.index(r, 2, cfg.n3, "l")};
        if (!seen.insert({e.i, e.j, e.l}).second) ck.fail(r, "repeated entry");
        omega.push_back(e);
        out.y[k] = r.values[3];
      }
      out.family = make_tensor_family(cfg.n1, cfg.n2, cfg.n3, std::move(omega),
                                      RngSeed{cfg.seed}.split(3));
      break;
    }
    case FamilyKind::kNeuralNet: {
      const Index d = static_cast<Index>(rows.front().values.size()) - 1;
      if (d < 1) ck.fail(rows.front(), "need at least one input column and the response");
      RealMatrix inputs(n, d);
      out.y.resize(n);
      for (Index k = 0; k < n; ++k) {
        for (Index c = 0; c < d; ++c) inputs(k, c) = rows[k].values[c];
        out.y[k] = rows[k].values[d];
      }
      out.family = make_nn_family(std::move(inputs), cfg.activation);
      break;
    }
    case FamilyKind::kDemixing: {
      DemixIndexSet omega;
      std::set<std::tuple<Index, Index, Index>> seen;
      out.y.resize(2 * n);
      for (Index k = 0; k < n; ++k) {
        const Row& r = rows[k];
        ck.expect_width(r, 5, "n,m,f,re,im");
        const DemixEntry e{ck.index(r, 0, cfg.sensors, "n"), ck.index(r, 1, cfg.sensors, "m"),
                           ck.index(r, 2, cfg.grid, "f")};
        if (!seen.insert({e.n, e.m, e.f}).second) ck.fail(r, "repeated entry");
        omega.push_back(e);
        out.y[k] = r.values[3];
        out.y[n + k] = r.values[4];
      }
      out.family = make_demixing_family(cfg.sensors, cfg.grid, std::move(omega));
      break;
    }
  }
  return out;
}

LoadedData load_data(const ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read data file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_data(cfg, ss.str(), path);
}

}  // namespace mgof::cli
