#pragma once

// CSV ingestion and output.
//
// Data files: a header row, numeric feature columns in order, and an optional
// `label` column whose empty cells mark unlabelled points. Partition files: a
// `cluster` column and an optional 0/1 `test` column. Trace files: columns
// `sweep,assignment,lengthscales,temperature,loglik` with `|`-joined vectors.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dcp/error.hpp"
#include "dcp/kernel.hpp"
#include "dcp/partition.hpp"
#include "dcp/sampler.hpp"

namespace dcp {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && ptr == e;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

struct CsvData {
  DataSet raw;                         // rows as read
  std::vector<std::string> feature_names;
  DedupResult dedup;                   // identical rows merged
};

inline CsvData read_csv(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": missing header row");
  const auto header = detail::split_csv_line(line);
  std::optional<std::size_t> label_col;
  CsvData out;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      if (label_col) throw InputError(source + ": duplicate 'label' column");
      label_col = c;
    } else {
      feature_cols.push_back(c);
      out.feature_names.push_back(header[c]);
    }
  }
  if (feature_cols.empty()) throw InputError(source + ": no feature columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError(source + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " columns, expected " +
                       std::to_string(header.size()));
    std::vector<double> row;
    for (std::size_t c : feature_cols) {
      double v;
      if (!detail::parse_double(cells[c], v))
        throw InputError(source + ": line " + std::to_string(line_no) + ", column '" +
                         header[c] + "': '" + cells[c] + "' is not a number");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
    if (label_col && !cells[*label_col].empty())
      out.raw.labels.emplace_back(cells[*label_col]);
    else
      out.raw.labels.emplace_back(std::nullopt);
  }
  if (rows.empty()) throw InputError(source + ": no data rows");
  out.raw.points.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t d = 0; d < feature_cols.size(); ++d)
      out.raw.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
  out.dedup = dedup_rows(out.raw);
  return out;
}

inline CsvData load_csv(const std::string& path) {
  auto in = detail::open_in(path);
  return read_csv(in, path);
}

inline void write_csv(std::ostream& out, const DataSet& data,
                      const std::vector<std::string>& feature_names = {}) {
  for (std::size_t d = 0; d < data.dim(); ++d) {
    if (d) out << ',';
    out << (d < feature_names.size() ? feature_names[d] : "x" + std::to_string(d));
  }
  out << ",label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t d = 0; d < data.dim(); ++d) {
      if (d) out << ',';
      out << detail::format_double(
          data.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)));
    }
    out << ',';
    if (i < data.labels.size() && data.labels[i]) out << *data.labels[i];
    out << '\n';
  }
}

struct PartitionFile {
  Partition partition;
  std::optional<std::vector<std::size_t>> test_indices;
};

inline PartitionFile read_partition(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": missing header row");
  const auto header = detail::split_csv_line(line);
  std::optional<std::size_t> cluster_col, test_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "cluster") cluster_col = c;
    if (header[c] == "test") test_col = c;
  }
  if (!cluster_col) throw InputError(source + ": no 'cluster' column");
  std::vector<std::string> ids;
  std::vector<std::size_t> test;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError(source + ": line " + std::to_string(line_no) + " has wrong column count");
    if (cells[*cluster_col].empty())
      throw InputError(source + ": line " + std::to_string(line_no) + " has no cluster");
    if (test_col) {
      const auto& t = cells[*test_col];
      if (t == "1" || t == "true")
        test.push_back(ids.size());
      else if (!(t == "0" || t == "false" || t.empty()))
        throw InputError(source + ": line " + std::to_string(line_no) + ": bad test flag '" +
                         t + "'");
    }
    ids.push_back(cells[*cluster_col]);
  }
  PartitionFile pf;
  pf.partition = Partition::canonicalize(ids);
  if (test_col) pf.test_indices = std::move(test);
  return pf;
}

inline PartitionFile load_partition(const std::string& path) {
  auto in = detail::open_in(path);
  return read_partition(in, path);
}

inline void write_partition(std::ostream& out, const Partition& p,
                            const std::optional<std::vector<std::size_t>>& test = std::nullopt) {
  out << (test ? "cluster,test\n" : "cluster\n");
  std::vector<bool> is_test(p.size(), false);
  if (test)
    for (std::size_t i : *test) is_test.at(i) = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << p[i];
    if (test) out << ',' << (is_test[i] ? 1 : 0);
    out << '\n';
  }
}

// Kernel hyperparameters as written in the `lengthscales` column: the
// lengthscale vector for SE, the delta value for the delta kernel.
inline std::string format_hyper(const KernelParams& p) {
  if (p.family == KernelFamily::Delta) return detail::format_double(p.delta_value);
  std::string s;
  for (std::size_t d = 0; d < p.lengthscales.size(); ++d) {
    if (d) s += '|';
    s += detail::format_double(p.lengthscales[d]);
  }
  return s;
}

// One row per sample; `representative` maps original rows onto the rows the
// sampler saw, so assignments are written for every original row.
inline void write_trace(std::ostream& out, const PosteriorTrace& trace,
                        const std::vector<std::size_t>& representative) {
  out << "sweep,assignment,lengthscales,temperature,loglik\n";
  for (const auto& s : trace.samples) {
    out << s.sweep << ',' << s.partition.expand(representative).to_string('|') << ','
        << format_hyper(s.params) << ',' << detail::format_double(s.params.temperature) << ','
        << detail::format_double(s.log_likelihood) << '\n';
  }
}

}  // namespace dcp
