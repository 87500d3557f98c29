#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace polylink {

// RFC 4180 style reader: quoted fields may hold commas, doubled quotes and
// line breaks. A trailing '\r' is dropped from every physical line.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(&in) {}

    // Next record, or nullopt at end of input. Blank lines come back as an
    // empty vector so callers can count them.
    std::optional<std::vector<std::string>> next();
    // 1-based physical line where the last returned record started.
    std::size_t line() const { return record_line_; }

private:
    std::istream* in_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

std::vector<std::string> parse_csv_line(std::string_view line);

// Quotes the field only when it contains a comma, quote or line break.
std::string csv_field(std::string_view value);

// Shortest representation that round-trips, '.' decimal separator.
std::string format_real(double value);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace polylink
