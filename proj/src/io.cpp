#include "kbkz/io.hpp"

#include <fmt/format.h>

#include <boost/algorithm/string.hpp>
#include <fstream>
#include <sstream>

#include "kbkz/errors.hpp"

namespace kbkz {

std::string format_double(double x) {
  if (x == 0.0) x = 0.0;
  return fmt::format("{:.17g}", x);
}

std::string csv_row(std::span<const double> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_double(values[i]);
  }
  return s;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw UsageError(fmt::format("cannot write '{}'", path.string()));
}

std::vector<std::vector<double>> read_csv_table(const std::filesystem::path& path,
                                                std::size_t columns) {
  std::ifstream in(path, std::ios::binary);
  const std::string field = path.string();
  if (!in) throw ConfigError(field, 0, "cannot open table");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_allowed = true;
  for (int no = 1; std::getline(in, line); ++no) {
    boost::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> parts;
    boost::split(parts, line, boost::is_any_of(","));
    std::vector<double> row;
    bool numeric = true;
    for (auto& p : parts) {
      boost::trim(p);
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(p, &pos));
        if (pos != p.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw ConfigError(field, no, "non-numeric table row");
    }
    header_allowed = false;
    if (row.size() < columns) {
      throw ConfigError(field, no, fmt::format("expected {} columns, got {}", columns, row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw ConfigError(field, 0, "table needs at least two rows");
  return rows;
}

}  // namespace kbkz
