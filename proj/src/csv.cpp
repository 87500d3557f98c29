#include "polylink/csv.hpp"

#include "polylink/errors.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace polylink {

std::optional<std::vector<std::string>> CsvReader::next() {
    std::string physical;
    if (!std::getline(*in_, physical)) return std::nullopt;
    record_line_ = ++line_;
    if (!physical.empty() && physical.back() == '\r') physical.pop_back();
    std::vector<std::string> fields;
    if (physical.empty()) return fields;

    std::string field;
    bool quoted = false;
    std::size_t pos = 0;
    for (;;) {
        if (pos == physical.size()) {
            if (!quoted) break;
            if (!std::getline(*in_, physical)) throw FormatError("unterminated quoted field starting on line " + std::to_string(record_line_));
            ++line_;
            if (!physical.empty() && physical.back() == '\r') physical.pop_back();
            field += '\n';
            pos = 0;
            continue;
        }
        const char c = physical[pos++];
        if (quoted) {
            if (c == '"') {
                if (pos < physical.size() && physical[pos] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::vector<std::string> parse_csv_line(std::string_view line) {
    std::istringstream in{std::string(line)};
    CsvReader reader(in);
    auto record = reader.next();
    return record ? *record : std::vector<std::string>{};
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (value == 0.0) return "0";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k) out << ',';
        out << csv_field(fields[k]);
    }
    out << '\n';
}

}  // namespace polylink
