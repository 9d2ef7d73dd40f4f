#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chronodil/constants.hpp"
#include "chronodil/errors.hpp"

#ifndef CHRONODIL_VERSION
#define CHRONODIL_VERSION "0.1.0"
#endif

namespace chronodil {

inline constexpr int csv_schema = 1;

struct CsvTable {
  std::string kind;  // command that produced it
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;

  void add_row(std::vector<double> row) {
    if (row.size() != header.size())
      throw std::logic_error("CsvTable: row has " + std::to_string(row.size()) + " values, header has " +
                             std::to_string(header.size()));
    for (std::size_t i = 0; i < row.size(); ++i)
      if (!std::isfinite(row[i]))
        throw NumericalError("CsvTable: non-finite value in column " + header[i] + ", row " +
                             std::to_string(rows.size()));
    rows.push_back(std::move(row));
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::out_of_range("CsvTable: no column " + name);
  }
};

namespace csv {

inline std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Metadata lines start with '#'; `config_text` is echoed line by line after "#config ".
inline std::string format(const CsvTable& t, const std::string& config_text, bool timestamp) {
  std::ostringstream o;
  o << "# chronodil " << CHRONODIL_VERSION << "\n";
  o << "# schema=" << csv_schema << "\n";
  o << "# command=" << t.kind << "\n";
  o << "# constants hbar=" << number(constants::hbar) << " c=" << number(constants::c)
    << " u=" << number(constants::atomic_mass_unit) << " m_e=" << number(constants::electron_mass) << "\n";
  if (timestamp) o << "# generated=" << utc_now() << "\n";
  for (const auto& [k, v] : t.metadata) o << "# " << k << "=" << v << "\n";
  std::istringstream in(config_text);
  std::string line;
  while (std::getline(in, line)) o << "#config " << line << "\n";
  for (std::size_t i = 0; i < t.header.size(); ++i) o << (i ? "," : "") << t.header[i];
  o << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) o << (i ? "," : "") << number(row[i]);
    o << "\n";
  }
  return o.str();
}

// Recovers the config text echoed by `format`.
inline std::string config_echo(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line, out;
  const std::string tag = "#config ";
  while (std::getline(in, line))
    if (line.rfind(tag, 0) == 0) out += line.substr(tag.size()) + "\n";
  return out;
}

}  // namespace csv
}  // namespace chronodil
