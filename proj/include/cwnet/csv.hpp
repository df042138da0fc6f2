#pragma once

#include <string>
#include <vector>

namespace cwnet::csv {

// Deterministic CSV writing: one formatter for every floating-point cell so
// identical values always produce identical bytes.
std::string format_double(double v);

class Writer {
  public:
    explicit Writer(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    std::string str() const;
    void write_file(const std::string& path) const;

    static std::string cell(double v) { return format_double(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(const char* v) { return v; }
    static std::string cell(const std::string& v) { return v; }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;  // throws if absent
};

Table parse_file(const std::string& path);
Table parse_string(const std::string& text);

}  // namespace cwnet::csv
