#pragma once

// File formats: whitespace matrix files, JSON reports, atomic writes.

#include <cstdint>
#include <limits>
#include <string>

#include "trisemi/matcore.hpp"
#include "trisemi/synth.hpp"

namespace trisemi {

/// "matrix n=<dim> field=<real|complex>" then n rows; complex entries as re,im.
Matrix parse_matrix_text(const std::string& text);
std::string matrix_to_text(const Matrix& m);

std::string read_file(const std::string& path);
/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

struct ReportFields {
  std::string target_path;
  double eps = 0.0;
  bool converged = false;
  double achieved_error = std::numeric_limits<double>::infinity();
  std::size_t word_length = 0;
  std::uint64_t nodes = 0;
  unsigned retries = 0;
  double error_bound = std::numeric_limits<double>::infinity();
  std::string message;  // omitted when empty
};

ReportFields report_fields(const ApproxReport& r, const std::string& target_path, double eps);
std::string report_to_json(const ReportFields& f);

/// "<out>.word" next to the report.
std::string word_path_for(const std::string& report_path);

}  // namespace trisemi
