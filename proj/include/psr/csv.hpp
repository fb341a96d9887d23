#pragma once

#include <Eigen/Dense>
#include <string>

namespace psr {

// Headerless comma-separated numeric matrix, row-major; each line one row.
// Throws ParseError with the 1-based row/column of the first offending cell,
// including the file path in the message.
Eigen::MatrixXd read_csv_matrix(const std::string& path);

// Single-column (or single-row) CSV as a vector.
Eigen::VectorXd read_csv_vector(const std::string& path);

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m);
void write_csv_vector(const std::string& path, const Eigen::VectorXd& v);

}  // namespace psr
