#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfrr::csv {

/// A parsed comma-separated file. Quoting is not supported; none of the
/// formats handled here contain embedded commas.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws InputError when absent.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, const std::string& source = "<memory>");

/// Shortest decimal text that parses back to the same double.
std::string format(double v);

double to_double(std::string_view field, const std::string& context);
long long to_int(std::string_view field, const std::string& context);

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mfrr::csv
