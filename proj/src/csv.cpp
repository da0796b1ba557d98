#include "rovella/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rovella/errors.hpp"

namespace rovella {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_number(long double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.21Lg", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
    for (const auto& h : header) field(h);
    end_row();
}

CsvWriter& CsvWriter::field(const std::string& s) {
    if (filled_ == columns_) throw InvalidState("too many CSV fields in a row");
    if (filled_ > 0) out_ << ',';
    out_ << csv_field(s);
    ++filled_;
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_) throw InvalidState("CSV row has the wrong number of fields");
    out_ << '\n';
    filled_ = 0;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ConfigError("CSV has no column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
    for (const auto& h : header) {
        if (h == name) return true;
    }
    return false;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += ch;
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
            any = true;
        } else if (ch == ',') {
            record.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (ch == '\r' || ch == '\n') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !cell.empty()) {
                record.push_back(std::move(cell));
                records.push_back(std::move(record));
            }
            cell.clear();
            record.clear();
            any = false;
        } else {
            cell += ch;
            any = true;
        }
    }
    if (quoted) throw ConfigError(path + ": unterminated quoted field");
    if (any || !cell.empty()) {
        record.push_back(std::move(cell));
        records.push_back(std::move(record));
    }
    if (records.empty()) throw ConfigError(path + ": empty CSV");

    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            throw ConfigError(path + ": row " + std::to_string(r) + " has the wrong number of fields");
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

}  // namespace rovella
