#pragma once

#include "hdp/kl.hpp"
#include "hdp/model.hpp"
#include "hdp/solvers.hpp"

#include <Eigen/Core>
#include <string>

namespace hdp {

// Comma-separated numeric rows, no header. Throws InvalidInputError on
// missing files, ragged rows, or non-numeric fields.
Eigen::MatrixXd read_csv_matrix(const std::string& path);

// Single row or single column file, flattened.
Eigen::VectorXd read_csv_vector(const std::string& path);

// %.17g, enough digits to round-trip a double.
std::string format_double(double v);

// Columns iter,value,grad_norm,theta at the recorded iterate indices;
// theta is the stepsize that produced the row's iterate (nan for row 0).
void write_trace_csv(const std::string& path, const Trace& trace,
                     bool header = true);

// One flat row: a_1..a_n, b_1..b_n.
void write_point_csv(const std::string& path, const HdpPoint& p,
                     bool header = true);

// Columns gap,slope.
void write_samples_csv(const std::string& path, const KlSampleSet& set,
                       bool header = true);

// Arbitrary matrix, one CSV row per matrix row.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M,
                      const std::string& header_line = "");

} // namespace hdp
