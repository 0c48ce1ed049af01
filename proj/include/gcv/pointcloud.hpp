#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcv/error.hpp"
#include "gcv/linalg.hpp"

namespace gcv {

/// Finite list of points in R^d with free-form provenance metadata (seed,
/// generating command, sample parameters).
struct PointCloud {
  std::size_t dim = 0;
  std::vector<Vec> points;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

inline double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError("malformed number '" + std::string(s) + "' in CSV", line_no);
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos
                                               ? std::string::npos
                                               : comma - start);
    // Trim surrounding blanks and a trailing CR.
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r' || field.back() == '\t'))
      field.pop_back();
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
      field.erase(field.begin());
    fields.push_back(std::move(field));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

/// Reads a cloud from CSV with header x1..xd.
inline PointCloud read_cloud_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV: missing header", 0);
  auto header = detail::split_csv_line(line);
  PointCloud cloud;
  cloud.dim = header.size();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] != "x" + std::to_string(j + 1))
      throw ParseError("cloud CSV header must be x1..xd, got '" + header[j] + "'", 0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") {
      ++line_no;
      continue;
    }
    auto fields = detail::split_csv_line(line);
    if (fields.size() != cloud.dim)
      throw ParseError("CSV row has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(cloud.dim),
                       line_no);
    Vec p(cloud.dim);
    for (std::size_t j = 0; j < cloud.dim; ++j) {
      p[j] = detail::parse_double(fields[j], line_no);
      if (!std::isfinite(p[j]))
        throw ParseError("non-finite coordinate in CSV", line_no);
    }
    cloud.points.push_back(std::move(p));
    ++line_no;
  }
  return cloud;
}

inline void write_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  for (std::size_t j = 0; j < cloud.dim; ++j) {
    if (j) out << ',';
    out << 'x' << (j + 1);
  }
  out << '\n';
  for (const auto& p : cloud.points) {
    for (std::size_t j = 0; j < cloud.dim; ++j) {
      if (j) out << ',';
      out << detail::format_double(p[j]);
    }
    out << '\n';
  }
}

}  // namespace gcv
