#ifndef ADVREC_ENV_INTERACTIONS_HPP
#define ADVREC_ENV_INTERACTIONS_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "advrec/core/error.hpp"

namespace advrec {

struct Interaction {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
  std::size_t line = 0;  // 1-based source line
};

/// Interaction log with dense user/item vocabularies and a per-user
/// chronological 70/30 train/test split.
struct Dataset {
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  std::vector<std::int64_t> users;  // dense index -> raw id, ascending
  std::vector<std::int64_t> items;

  std::size_t user_index(std::int64_t raw) const { return index_of(users, raw, "user"); }
  std::size_t item_index(std::int64_t raw) const { return index_of(items, raw, "item"); }
  std::size_t size() const { return train.size() + test.size(); }

 private:
  static std::size_t index_of(const std::vector<std::int64_t>& vocab, std::int64_t raw, const char* what) {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), raw);
    require(it != vocab.end() && *it == raw, ErrorKind::lookup, std::string("unknown ") + what + " id " + std::to_string(raw));
    return static_cast<std::size_t>(it - vocab.begin());
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Splits interactions per user by (timestamp, line) order: the first
/// floor(0.7 n) go to train.
inline void split_train_test(std::vector<Interaction> all, Dataset& ds) {
  std::map<std::int64_t, std::vector<Interaction>> by_user;
  for (auto& it : all) by_user[it.user_id].push_back(it);
  for (auto& [user, list] : by_user) {
    std::stable_sort(list.begin(), list.end(), [](const Interaction& a, const Interaction& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.line < b.line;
    });
    const std::size_t n_train = list.size() * 7 / 10;
    for (std::size_t i = 0; i < list.size(); ++i) (i < n_train ? ds.train : ds.test).push_back(list[i]);
  }
}

/// Parses `user_id,item_id,rating,timestamp` lines. A first line whose first
/// field is not numeric is treated as a header.
inline Dataset parse_interactions(std::istream& in, const std::string& source = "<stream>") {
  std::vector<Interaction> all;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = detail::trim(line);
    if (lineno == 1 && sv.size() >= 3 && static_cast<unsigned char>(sv[0]) == 0xEF) sv.remove_prefix(3);  // BOM
    if (sv.empty()) continue;
    auto fields = detail::split_commas(sv);
    if (lineno == 1) {
      std::int64_t probe = 0;
      if (!detail::parse_number(fields[0], probe)) continue;
    }
    const std::string where = source + ", line " + std::to_string(lineno);
    require(fields.size() == 4, ErrorKind::parse, where + ": expected 4 fields, got " + std::to_string(fields.size()));
    Interaction rec;
    rec.line = lineno;
    require(detail::parse_number(fields[0], rec.user_id), ErrorKind::parse, where + ": user_id is not an integer");
    require(detail::parse_number(fields[1], rec.item_id), ErrorKind::parse, where + ": item_id is not an integer");
    require(detail::parse_number(fields[2], rec.rating), ErrorKind::parse, where + ": rating is not a number");
    require(detail::parse_number(fields[3], rec.timestamp), ErrorKind::parse, where + ": timestamp is not an integer");
    all.push_back(rec);
  }
  require(!all.empty(), ErrorKind::data, source + ": no interactions");

  Dataset ds;
  for (const auto& r : all) {
    ds.users.push_back(r.user_id);
    ds.items.push_back(r.item_id);
  }
  for (auto* vocab : {&ds.users, &ds.items}) {
    std::sort(vocab->begin(), vocab->end());
    vocab->erase(std::unique(vocab->begin(), vocab->end()), vocab->end());
  }
  split_train_test(std::move(all), ds);
  return ds;
}

inline Dataset load_interactions(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open interactions file " + path);
  return parse_interactions(in, path);
}

}  // namespace advrec

#endif  // ADVREC_ENV_INTERACTIONS_HPP
