#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "ssvb/model.hpp"

namespace ssvb {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

double parse_double(std::string_view tok, std::size_t line_no) {
  double value = 0.0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (tok.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": cannot parse '" +
                                      std::string(tok) + "' as a number");
  }
  return value;
}

}  // namespace

RawDataset read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  // Header, skipping a UTF-8 byte order mark if present.
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw Error(ErrorCode::Parse, "empty input: header row required");

  const auto header = split(line);
  Index y_col = -1;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < header.size(); ++k) {
    auto name = unquote(header[k]);
    if (name == "y") {
      if (y_col >= 0) throw Error(ErrorCode::Parse, "more than one column named 'y'");
      y_col = static_cast<Index>(k);
    } else {
      names.push_back(std::move(name));
    }
  }
  if (y_col < 0) throw Error(ErrorCode::Parse, "no column named 'y' in header");
  if (names.empty()) throw Error(ErrorCode::Parse, "no feature columns");

  const std::size_t width = header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != width) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(width) + " fields, got " +
                                        std::to_string(fields.size()));
    }
    for (const auto f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }

  RawDataset out;
  const auto n = static_cast<Index>(rows);
  const auto p = static_cast<Index>(names.size());
  out.y.resize(n);
  out.X.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    Index j = 0;
    for (Index k = 0; k < static_cast<Index>(width); ++k) {
      const double v = values[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(k)];
      if (k == y_col) {
        out.y(i) = v;
      } else {
        out.X(i, j++) = v;
      }
    }
  }
  out.feature_names = std::move(names);
  validate(out);
  return out;
}

RawDataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const RawDataset& data) {
  out << "y";
  for (Index j = 0; j < data.p(); ++j) {
    out << ',';
    if (j < static_cast<Index>(data.feature_names.size())) {
      out << data.feature_names[j];
    } else {
      out << 'x' << (j + 1);
    }
  }
  out << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < data.n(); ++i) {
    out << data.y(i);
    for (Index j = 0; j < data.p(); ++j) out << ',' << data.X(i, j);
    out << '\n';
  }
}

}  // namespace ssvb
