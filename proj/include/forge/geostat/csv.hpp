#pragma once

#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "forge/errors.hpp"
#include "forge/geostat/params.hpp"

namespace forge::geostat {

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw Error(Errc::io_error, "bad numeric field '" + s + "' on line " + std::to_string(line_no));
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// Dataset files: header `x,y,z`, one row per location.
inline std::string dataset_to_csv(const GeoDataset& ds) {
  std::ostringstream out;
  out << "x,y,z\n";
  for (std::size_t i = 0; i < ds.size(); ++i)
    out << detail::format_double(ds.locations[i].x) << ','
        << detail::format_double(ds.locations[i].y) << ','
        << detail::format_double(ds.measurements[i]) << '\n';
  return out.str();
}

inline GeoDataset dataset_from_csv(std::istream& in) {
  GeoDataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    if (line_no == 1) {
      if (fields != std::vector<std::string>{"x", "y", "z"})
        throw Error(Errc::io_error, "expected header x,y,z");
      continue;
    }
    if (fields.size() != 3)
      throw Error(Errc::io_error, "expected 3 fields on line " + std::to_string(line_no));
    ds.locations.push_back(
        {detail::parse_double(fields[0], line_no), detail::parse_double(fields[1], line_no)});
    ds.measurements.push_back(detail::parse_double(fields[2], line_no));
  }
  return ds;
}

// Query files carry locations only: header `x,y`.
inline std::string points_to_csv(const std::vector<Point>& pts) {
  std::ostringstream out;
  out << "x,y\n";
  for (const auto& p : pts)
    out << detail::format_double(p.x) << ',' << detail::format_double(p.y) << '\n';
  return out.str();
}

inline std::vector<Point> points_from_csv(std::istream& in) {
  std::vector<Point> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    if (line_no == 1) {
      if (fields != std::vector<std::string>{"x", "y"})
        throw Error(Errc::io_error, "expected header x,y");
      continue;
    }
    if (fields.size() != 2)
      throw Error(Errc::io_error, "expected 2 fields on line " + std::to_string(line_no));
    pts.push_back(
        {detail::parse_double(fields[0], line_no), detail::parse_double(fields[1], line_no)});
  }
  return pts;
}

}  // namespace forge::geostat
