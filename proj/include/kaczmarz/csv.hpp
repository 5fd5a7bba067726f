#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <locale>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "kaczmarz/error.hpp"
#include "kaczmarz/matrix_core.hpp"

namespace kaczmarz::csv {

/// Shortest-safe round-trip text for a double: 17 significant digits,
/// '.' decimal separator regardless of locale.
inline std::string format(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error(ErrorKind::IoError, "failed to format number");
  return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_cell(std::string_view cell, std::string_view source, std::size_t line, std::size_t column) {
  const std::string_view text = trim(cell);
  double value = 0.0;
  const char* begin = text.data();
  if (!text.empty() && text.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::ParseError, std::string(source) + ": line " + std::to_string(line) + ", column " + std::to_string(column) +
                                           ": cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

}  // namespace detail

/// Parses header-free CSV text into a dense matrix. Blank lines and lines
/// starting with '#' are skipped; every data line must have the same width.
inline DenseMatrix parse_matrix(std::string_view text, std::string_view source = "<input>") {
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const std::string_view content = detail::trim(line);
    if (content.empty() || content.front() == '#') continue;

    Index width = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = content.find(',', start);
      const std::string_view cell = content.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                           : comma - start);
      values.push_back(detail::parse_cell(cell, source, line_no, static_cast<std::size_t>(width) + 1));
      ++width;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols < 0) {
      cols = width;
    } else if (width != cols) {
      throw Error(ErrorKind::ParseError, std::string(source) + ": line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                                             " columns, found " + std::to_string(width));
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::ParseError, std::string(source) + ": no data rows");
  DenseMatrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline DenseMatrix read_matrix(const std::filesystem::path& path) {
  return parse_matrix(read_file(path), path.string());
}

/// Reads a one-column CSV as a vector.
inline Vector read_vector(const std::filesystem::path& path) {
  const DenseMatrix m = read_matrix(path);
  if (m.cols() != 1) throw Error(ErrorKind::ParseError, path.string() + ": expected a single column");
  return m.col(0);
}

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

/// Accumulates CSV text with a leading '#' provenance line.
class Writer {
 public:
  explicit Writer(std::string_view header_comment) {
    out_.imbue(std::locale::classic());
    out_ << "# " << header_comment << '\n';
  }

  Writer& columns(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (auto name : names) {
      if (!first) out_ << ',';
      out_ << name;
      first = false;
    }
    out_ << '\n';
    return *this;
  }

  template <typename... Cells>
  Writer& row(const Cells&... cells) {
    bool first = true;
    ((emit(cells, first)), ...);
    out_ << '\n';
    return *this;
  }

  std::string str() const { return out_.str(); }

 private:
  template <typename T>
  void emit(const T& cell, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      out_ << format(cell);
    } else {
      out_ << cell;
    }
  }

  std::ostringstream out_;
};

}  // namespace kaczmarz::csv
