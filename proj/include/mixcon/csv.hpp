#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mixcon {

/// Shortest decimal that round-trips, independent of locale and stream
/// state. nan and inf print as "nan", "inf", "-inf".
std::string format_double(double value);

/// Comma-separated table built in memory; fields containing a comma, quote
/// or newline are quoted.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> fields);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mixcon
