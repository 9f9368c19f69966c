#pragma once

// Minimal RFC-4180 reading/writing with deterministic number formatting.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtrack/matrix.hpp"

namespace mtrack::csv {

/// Shortest representation that round-trips exactly. Zero is always "0".
[[nodiscard]] std::string format_double(double v);

/// Parses a full-string decimal number; throws ValidationError on garbage.
[[nodiscard]] double parse_double(std::string_view text);
[[nodiscard]] long long parse_int(std::string_view text);

/// Splits one record. Handles quoted fields and doubled quotes.
[[nodiscard]] std::vector<std::string> split_line(std::string_view line);

/// Quotes a field only when it contains a separator, quote or newline.
[[nodiscard]] std::string escape(std::string_view field);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Reads a header plus data rows. Blank lines are skipped; ragged rows are an error.
[[nodiscard]] Table read_table(std::istream& in);
[[nodiscard]] Table read_table(const std::filesystem::path& path);

void write_row(std::ostream& out, std::span<const std::string> fields);

void write_matrix(std::ostream& out, const Matrix& m, std::span<const std::string> header);
void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  std::span<const std::string> header);

/// Reads an all-numeric table with a header row.
[[nodiscard]] Matrix read_matrix(const std::filesystem::path& path,
                                 std::vector<std::string>* header = nullptr);

}  // namespace mtrack::csv
