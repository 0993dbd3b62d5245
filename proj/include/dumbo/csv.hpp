#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dumbo::csv {

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double value);

/// Quotes a field containing a comma, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Parses comma-separated rows with optional double-quoted fields.
std::vector<std::vector<std::string>> read(std::istream& in);

double parse_double(std::string_view text);

}  // namespace dumbo::csv
