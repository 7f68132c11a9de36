#include "crowd/io.hpp"

#include <cstdio>
#include <fstream>

namespace crowd {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(trim(line.substr(start)));
                break;
            }
            fields.push_back(trim(line.substr(start, comma - start)));
            start = comma + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

ResponseMatrix read_matrix_csv(const std::string& path) {
    const auto rows = read_csv_rows(path);
    if (rows.empty()) throw DataError("empty matrix file: " + path);
    const std::size_t d = rows[0].size();
    ResponseMatrix Y(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d)
            throw DataError("ragged matrix row " + std::to_string(i) + " in " + path);
        for (std::size_t j = 0; j < d; ++j) {
            int v;
            try {
                v = std::stoi(rows[i][j]);
            } catch (const std::exception&) {
                throw DataError("non-integer matrix entry '" + rows[i][j] + "' in " + path);
            }
            if (v < -1 || v > 1)
                throw DataError("matrix entries must be -1, 0 or +1 in " + path);
            Y.entry(i, j) = static_cast<std::int8_t>(v);
        }
    }
    return Y;
}

void write_matrix_csv(const std::string& path, const ResponseMatrix& Y) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (std::size_t i = 0; i < Y.workers(); ++i) {
        for (std::size_t j = 0; j < Y.tasks(); ++j) {
            if (j) out << ',';
            out << static_cast<int>(Y.entry(i, j));
        }
        out << '\n';
    }
}

}  // namespace crowd
