#pragma once

// CSV observation readers. One observation unit per row, comma separated;
// an optional first line of column names is skipped when its first field is
// not a number. Indices are zero-based.
//
//   real_matrix     i,j,value
//   complex_matrix  i,j,value,value_imag
//   tensor          i,j,l,value
//   nn              x1,...,xd,y          (d taken from the column count)
//   demixing        n,m,f,re,im
//
// Matrix and tensor bounds come from model.n1/n2/n3, demixing bounds from
// model.sensors/grid. Repeated units are rejected.

#include <stdexcept>
#include <string>

#include "mgof/cli/config.hpp"

namespace mgof::cli {

/// Malformed data file; the message carries "path:line:".
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedData {
  FamilyPtr family;
  Vector y;
};

LoadedData load_data(const ExperimentConfig& cfg, const std::string& path);
LoadedData parse_data(const ExperimentConfig& cfg, const std::string& text,
                      const std::string& source);

}  // namespace mgof::cli
