#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace rovella {

// Round-trip text for numbers: %.17g for double, %.21Lg for long double.
std::string format_number(double v);
std::string format_number(long double v);

// Quotes a field when it holds a comma, quote, CR or LF; quotes inside are doubled.
std::string csv_field(const std::string& s);

/// Writes rows of preformatted fields with "\n" line endings.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header);

    CsvWriter& field(const std::string& s);
    CsvWriter& field(double v) { return field(format_number(v)); }
    CsvWriter& field(long double v) { return field(format_number(v)); }
    CsvWriter& field(std::int64_t v) { return field(std::to_string(v)); }
    CsvWriter& field(std::uint64_t v) { return field(std::to_string(v)); }
    CsvWriter& field(int v) { return field(std::to_string(v)); }
    void end_row();

private:
    std::ostream& out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // ConfigError when the column is missing.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

// RFC-4180 reader: quoted fields, doubled quotes, "\n" or "\r\n" line ends.
CsvTable read_csv(const std::string& path);

}  // namespace rovella
