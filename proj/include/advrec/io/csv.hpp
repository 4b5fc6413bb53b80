#ifndef ADVREC_IO_CSV_HPP
#define ADVREC_IO_CSV_HPP

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "advrec/core/error.hpp"

namespace advrec {

/// Shortest representation that parses back to the same double.
inline std::string format_number(double x) {
  require(std::isfinite(x), ErrorKind::numeric, "cannot write a non-finite number to CSV");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  require(ec == std::errc(), ErrorKind::numeric, "number formatting failed");
  return std::string(buf, end);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(ErrorKind::lookup, "CSV has no column '" + std::string(name) + "'");
  }

  friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

inline std::string csv_field(std::string_view f) {
  if (f.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(f);
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// RFC-4180 with LF line ends and a trailing newline.
inline std::string write_csv(const CsvTable& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    require(fields.size() == t.header.size(), ErrorKind::data, "CSV row width differs from header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_field(fields[i]);
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

/// Accepts LF or CRLF, quoted fields with doubled quotes and embedded newlines.
inline CsvTable read_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, after_quote = false, any = false;
  auto end_field = [&] {
    rec.push_back(std::move(field));
    field.clear();
    after_quote = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(rec));
    rec.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c != '"') {
        field += c;
      } else if (i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else {
        quoted = false;
        after_quote = true;
      }
      continue;
    }
    if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else if (c == '"') {
      require(field.empty() && !after_quote, ErrorKind::parse, "stray quote in CSV field");
      quoted = true;
      any = true;
    } else {
      require(!after_quote, ErrorKind::parse, "text after closing quote in CSV field");
      field += c;
      any = true;
    }
  }
  require(!quoted, ErrorKind::parse, "unterminated quoted CSV field");
  if (any || !field.empty()) end_record();
  require(!records.empty(), ErrorKind::parse, "CSV has no header row");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    require(records[i].size() == t.header.size(), ErrorKind::parse,
            "CSV row " + std::to_string(i) + " has " + std::to_string(records[i].size()) + " fields, expected " +
                std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

}  // namespace advrec

#endif  // ADVREC_IO_CSV_HPP
