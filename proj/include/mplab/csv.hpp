#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mplab::csv {

/// Shortest round-trip decimal form, '.' separator, independent of locale.
std::string format_double(double value);
std::string format_bool(bool value);

/// Values joined by ';' (list-valued CSV cells).
std::string join(const std::vector<std::string>& items);
std::vector<std::string> split(std::string_view text, char sep);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const;  // -1 if absent
  std::string to_string() const;
};

/// Fields never contain ',' or quotes, so no quoting is needed.
Table parse(std::string_view text);
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

}  // namespace mplab::csv
