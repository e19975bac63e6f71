#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>

namespace isd::csv {

/// Shortest representation that round-trips to the same double.
std::string number(double value);

/// Writes one comma-separated row terminated by '\n'.
void header(std::ostream& out, std::initializer_list<std::string_view> columns);

}  // namespace isd::csv
