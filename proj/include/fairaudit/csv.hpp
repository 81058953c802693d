#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fairaudit::csv {

using Record = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF line ends, UTF-8 BOM.
std::vector<Record> read_file(const std::string& path);
std::vector<Record> parse(std::string_view text);

std::string escape(std::string_view field);
void write_record(std::ostream& out, const Record& fields);

/// Fixed-point rendering used by every table writer, so outputs are byte-stable.
std::string fixed(double v, int precision = 6);
/// Shortest text that round-trips the double exactly.
std::string exact(double v);

}  // namespace fairaudit::csv
