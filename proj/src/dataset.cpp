#include "uqpe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace uqpe {

void validate(const Dataset& data) {
  const Index n = data.n();
  const Index d = data.d();
  if (n == 0 || d == 0) raise(ErrorCode::EmptyInput, "dataset: no rows or columns");
  if (data.x.rows() != n)
    raise(ErrorCode::InvalidArgument, "dataset: y and x row counts differ");
  if (n < d + 1)
    raise(ErrorCode::InvalidArgument,
          "dataset: needs n >= d + 1 rows, got n=" + std::to_string(n) + ", d=" + std::to_string(d));
  if (!data.y.allFinite() || !data.x.allFinite())
    raise(ErrorCode::InvalidArgument, "dataset: non-finite entries");
  if ((data.x.col(0).array() != 1.0).any())
    raise(ErrorCode::InvalidArgument, "dataset: column 0 must be the intercept constant 1");
  if (data.target_index <= 0 || data.target_index >= d)
    raise(ErrorCode::InvalidArgument, "dataset: target_index must lie in 1..d-1");
  if (data.column_names.size() != static_cast<std::size_t>(d))
    raise(ErrorCode::InvalidArgument, "dataset: expected one label per covariate column");
}

Dataset make_dataset(Vector y, Matrix x, Index target_index, std::vector<std::string> column_names,
                     std::string outcome_name) {
  Dataset data{std::move(y), std::move(x), target_index, std::move(column_names), std::move(outcome_name)};
  validate(data);
  return data;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding blanks and a trailing CR from Windows line endings
    std::size_t b = cell.find_first_not_of(" \t\r");
    std::size_t e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool is_missing_token(const std::string& s) {
  if (s.empty()) return true;
  static const char* tokens[] = {"NA", "na", "N/A", "n/a", "NaN", "nan", "NAN", "NULL", "null", "."};
  return std::any_of(std::begin(tokens), std::end(tokens), [&](const char* t) { return s == t; });
}

// Parses a decimal/scientific literal; returns false on anything else.
bool parse_cell(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first; // from_chars rejects a leading '+'
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

} // namespace

Dataset load_csv(const std::string& path, const CsvSelection& selection) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::EmptyFile, "load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::EmptyFile, "load_csv: '" + path + "' is empty");
  const std::vector<std::string> header = split_csv_line(line);

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      raise(ErrorCode::MissingColumn, "load_csv: column '" + name + "' not found in '" + path + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  if (selection.outcome == selection.target)
    raise(ErrorCode::InvalidArgument, "load_csv: outcome and target must be distinct columns");
  for (const auto& c : selection.controls)
    if (c == selection.target || c == selection.outcome)
      raise(ErrorCode::InvalidArgument, "load_csv: control '" + c + "' duplicates outcome or target");

  const std::size_t outcome_col = column_of(selection.outcome);
  std::vector<std::size_t> covariate_cols;
  for (const auto& c : selection.controls) covariate_cols.push_back(column_of(c));
  covariate_cols.push_back(column_of(selection.target));

  std::vector<double> y_values;
  std::vector<double> x_values; // row-major, covariates only
  long row_number = 1;          // header is row 1
  while (std::getline(in, line)) {
    ++row_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv_line(line);

    auto cell_at = [&](std::size_t col) -> const std::string& {
      static const std::string empty;
      return col < cells.size() ? cells[col] : empty;
    };

    bool missing = false;
    double yv = 0.0;
    std::vector<double> xv(covariate_cols.size());
    for (std::size_t k = 0; !missing && k <= covariate_cols.size(); ++k) {
      const bool outcome_cell = k == covariate_cols.size();
      const std::size_t col = outcome_cell ? outcome_col : covariate_cols[k];
      const std::string& cell = cell_at(col);
      double value;
      if (is_missing_token(cell)) {
        missing = true;
      } else if (!parse_cell(cell, value)) {
        raise(ErrorCode::NonNumericCell, "load_csv: row " + std::to_string(row_number) + ", column '" +
                                             header[col] + "' holds '" + cell + "'");
      } else if (outcome_cell) {
        yv = value;
      } else {
        xv[k] = value;
      }
    }
    if (missing) {
      if (selection.drop_na) continue;
      raise(ErrorCode::RowWithMissingValue,
            "load_csv: row " + std::to_string(row_number) + " has a missing value (pass --drop-na to skip)");
    }
    y_values.push_back(yv);
    x_values.insert(x_values.end(), xv.begin(), xv.end());
  }

  const Index n = static_cast<Index>(y_values.size());
  if (n == 0) raise(ErrorCode::EmptyFile, "load_csv: '" + path + "' has no data rows");
  const Index d = static_cast<Index>(covariate_cols.size()) + 1;

  Vector y = Eigen::Map<Vector>(y_values.data(), n);
  Matrix x(n, d);
  x.col(0).setOnes();
  for (Index i = 0; i < n; ++i)
    for (Index j = 1; j < d; ++j) x(i, j) = x_values[static_cast<std::size_t>(i * (d - 1) + (j - 1))];

  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  names.emplace_back("const");
  for (const auto& c : selection.controls) names.push_back(c);
  names.push_back(selection.target);

  return make_dataset(std::move(y), std::move(x), d - 1, std::move(names), selection.outcome);
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::InvalidArgument, "write_csv: cannot open '" + path + "' for writing");
  out << data.outcome_name;
  for (Index j = 1; j < data.d(); ++j) out << ',' << data.column_names[static_cast<std::size_t>(j)];
  out << '\n';
  char buffer[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    out << buffer << sep;
  };
  for (Index i = 0; i < data.n(); ++i) {
    put(data.y[i], data.d() > 1 ? ',' : '\n');
    for (Index j = 1; j < data.d(); ++j) put(data.x(i, j), j + 1 == data.d() ? '\n' : ',');
  }
}

Dataset select_rows(const Dataset& data, const std::vector<Index>& rows) {
  const Index n = static_cast<Index>(rows.size());
  Dataset out;
  out.y.resize(n);
  out.x.resize(n, data.d());
  for (Index i = 0; i < n; ++i) {
    out.y[i] = data.y[rows[static_cast<std::size_t>(i)]];
    out.x.row(i) = data.x.row(rows[static_cast<std::size_t>(i)]);
  }
  out.target_index = data.target_index;
  out.column_names = data.column_names;
  out.outcome_name = data.outcome_name;
  return out;
}

} // namespace uqpe
