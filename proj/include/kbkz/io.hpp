#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kbkz {

/// Round-trippable decimal: 17 significant digits, "-0" folded to "0".
std::string format_double(double x);

/// Comma-joined format_double of each value.
std::string csv_row(std::span<const double> values);

/// Writes bytes verbatim (binary mode, no locale), creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Numeric CSV with at least `columns` fields per row. Blank lines, '#' comments and a
/// non-numeric header line are skipped. Throws ConfigError on anything else.
std::vector<std::vector<double>> read_csv_table(const std::filesystem::path& path,
                                                std::size_t columns);

}  // namespace kbkz
