#include "hdp/io.hpp"

#include "hdp/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace hdp {

namespace {

std::vector<double> parse_csv_row(const std::string& line,
                                  const std::string& path, int line_no) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    // Trim surrounding whitespace so "1, 2" parses.
    const auto first = field.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      throw InvalidInputError("empty field in " + path + " line " +
                              std::to_string(line_no));
    }
    const auto last = field.find_last_not_of(" \t\r");
    const std::string token = field.substr(first, last - first + 1);
    try {
      std::size_t pos = 0;
      const double v = std::stod(token, &pos);
      if (pos != token.size()) {
        throw std::invalid_argument(token);
      }
      row.push_back(v);
    } catch (const std::exception&) {
      throw InvalidInputError("non-numeric field '" + token + "' in " + path +
                              " line " + std::to_string(line_no));
    }
  }
  return row;
}

} // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInputError("cannot open file: " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue; // skip blank lines
    }
    rows.push_back(parse_csv_row(line, path, line_no));
    if (rows.size() > 1 && rows.back().size() != rows.front().size()) {
      throw InvalidInputError("ragged row in " + path + " line " +
                              std::to_string(line_no));
    }
  }
  if (rows.empty()) {
    throw InvalidInputError("no data rows in " + path);
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return M;
}

Eigen::VectorXd read_csv_vector(const std::string& path) {
  const Eigen::MatrixXd M = read_csv_matrix(path);
  if (M.rows() != 1 && M.cols() != 1) {
    throw InvalidInputError("expected a single row or column in " + path);
  }
  Eigen::VectorXd v(M.size());
  if (M.rows() == 1) {
    v = M.row(0).transpose();
  } else {
    v = M.col(0);
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void write_trace_csv(const std::string& path, const Trace& trace,
                     bool header) {
  std::ofstream out(path);
  if (!out) {
    throw InvalidInputError("cannot open file for writing: " + path);
  }
  if (header) {
    out << "iter,value,grad_norm,theta\n";
  }
  for (std::size_t r = 0; r < trace.iterate_indices.size(); ++r) {
    const std::size_t k = trace.iterate_indices[r];
    out << k << ',' << format_double(trace.values.at(k)) << ','
        << format_double(trace.grad_norms.at(k)) << ',';
    if (k == 0 || trace.stepsizes.empty()) {
      out << "nan";
    } else {
      out << format_double(trace.stepsizes.at(k - 1));
    }
    out << '\n';
  }
}

void write_point_csv(const std::string& path, const HdpPoint& p, bool header) {
  std::ofstream out(path);
  if (!out) {
    throw InvalidInputError("cannot open file for writing: " + path);
  }
  const Eigen::Index n = p.dim();
  if (header) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out << "a" << (i + 1) << ',';
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      out << "b" << (i + 1) << (i + 1 < n ? "," : "");
    }
    out << '\n';
  }
  const Eigen::VectorXd z = p.stacked();
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out << format_double(z(i)) << (i + 1 < z.size() ? "," : "");
  }
  out << '\n';
}

void write_samples_csv(const std::string& path, const KlSampleSet& set,
                       bool header) {
  std::ofstream out(path);
  if (!out) {
    throw InvalidInputError("cannot open file for writing: " + path);
  }
  if (header) {
    out << "gap,slope\n";
  }
  for (const KlSample& s : set.samples) {
    out << format_double(s.gap) << ',' << format_double(s.slope) << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M,
                      const std::string& header_line) {
  std::ofstream out(path);
  if (!out) {
    throw InvalidInputError("cannot open file for writing: " + path);
  }
  if (!header_line.empty()) {
    out << header_line << '\n';
  }
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      out << format_double(M(i, j)) << (j + 1 < M.cols() ? "," : "");
    }
    out << '\n';
  }
}

} // namespace hdp
