#include "cwnet/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cwnet/errors.hpp"

namespace cwnet::csv {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    // %.12g keeps rates and dB values readable while staying stable under
    // round-trip parsing at the precision the artifact asserts.
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

Writer::Writer(std::vector<std::string> header) : header_(std::move(header)) {}

void Writer::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw UsageError("csv: row width mismatch");
    rows_.push_back(std::move(cells));
}

std::string Writer::str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out += ',';
        out += header_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

void Writer::write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw PersistenceError(path + ": cannot open for writing");
    const std::string s = str();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw PersistenceError(path + ": write failed");
}

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw UsageError("csv: no column named " + name);
}

Table parse_string(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(cur);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size()) throw UsageError("csv: ragged row");
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

Table parse_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw PersistenceError(path + ": cannot open for reading");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str());
}

}  // namespace cwnet::csv
