#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "uqpe/errors.hpp"

namespace uqpe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Estimation sample. Column 0 of x is the intercept constant; the scalar
// target covariate sits at target_index (never 0). Immutable by convention
// after construction, so it can be shared across concurrent readers.
struct Dataset {
  Vector y;
  Matrix x; // n x d, column 0 identically 1
  Index target_index = 0;
  std::vector<std::string> column_names; // d labels, [0] = "const"
  std::string outcome_name = "y";

  Index n() const { return y.size(); }
  Index d() const { return x.cols(); }
  const std::string& target_name() const { return column_names[static_cast<std::size_t>(target_index)]; }
};

// Throws on any invariant violation: finite entries, intercept column,
// n >= d + 1, valid target index, label count.
void validate(const Dataset& data);

Dataset make_dataset(Vector y, Matrix x, Index target_index, std::vector<std::string> column_names,
                     std::string outcome_name = "y");

struct CsvSelection {
  std::string outcome;
  std::string target;
  std::vector<std::string> controls;
  bool drop_na = false; // default: a missing value is a hard error
};

// UTF-8, comma-separated, header row, '.' decimal, scientific notation
// accepted. Rows with missing values in the selected columns error out
// (or are dropped when drop_na is set).
Dataset load_csv(const std::string& path, const CsvSelection& selection);

// Writes outcome plus the non-intercept covariate columns at 17 significant
// digits, so load_csv(write_csv(data)) round-trips the sample.
void write_csv(const Dataset& data, const std::string& path);

// Row-resampled copy (pairs kept intact); used by the pairwise bootstrap.
Dataset select_rows(const Dataset& data, const std::vector<Index>& rows);

} // namespace uqpe
