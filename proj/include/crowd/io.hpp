#pragma once

#include <string>
#include <vector>

#include "crowd/types.hpp"

namespace crowd {

// Comma-separated rows of trimmed fields; blank lines are skipped.
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path);

// Deterministic double formatting used by every CSV writer (%.10g).
std::string format_double(double v);

// Dense numeric response matrix: one row per worker, entries -1/0/+1.
ResponseMatrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const ResponseMatrix& Y);

}  // namespace crowd
