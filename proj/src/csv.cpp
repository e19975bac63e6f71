#include "isd/csv.hpp"

#include <ostream>

#include <fmt/format.h>

namespace isd::csv {

std::string number(double value) { return fmt::format("{}", value); }

void header(std::ostream& out, std::initializer_list<std::string_view> columns) {
  bool first = true;
  for (auto c : columns) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

}  // namespace isd::csv
