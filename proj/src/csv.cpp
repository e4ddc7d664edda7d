#include "granvar/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace granvar::csv {

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string number(std::int64_t v) { return std::to_string(v); }

std::string significant(double v, int digits) {
  if (digits < 1 || digits > 30) throw std::invalid_argument("digits must lie in 1..30");
  if (v == 0.0) return "0";
  if (!std::isfinite(v)) return number(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.40e", std::fabs(v));
  std::string mant;
  mant += buf[0];
  for (const char* p = buf + 2; *p != 'e'; ++p) mant += *p;
  int exponent = std::atoi(std::strchr(buf, 'e') + 1);
  std::string kept = mant.substr(0, static_cast<std::size_t>(digits));
  if (mant[static_cast<std::size_t>(digits)] >= '5') {
    int i = digits - 1;
    while (i >= 0 && kept[static_cast<std::size_t>(i)] == '9') kept[static_cast<std::size_t>(i--)] = '0';
    if (i < 0) {
      kept.insert(kept.begin(), '1');
      kept.pop_back();
      ++exponent;
    } else {
      ++kept[static_cast<std::size_t>(i)];
    }
  }
  std::string out = v < 0.0 ? "-" : "";
  out += kept[0];
  if (digits > 1) out += "." + kept.substr(1);
  char tail[16];
  std::snprintf(tail, sizeof tail, "e%+03d", exponent);
  return out + tail;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Writer::Writer(const std::filesystem::path& path, const std::string& comment)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (!comment.empty()) out_ << "# " << comment << '\n';
}

Writer& Writer::header(std::initializer_list<std::string_view> names) {
  bool first = true;
  for (auto n : names) {
    if (!first) out_ << ',';
    out_ << n;
    first = false;
  }
  out_ << '\n';
  return *this;
}

Writer& Writer::header(const std::vector<std::string>& names) { return row(names); }

Writer& Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
  return *this;
}

std::vector<std::vector<std::string>> read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace granvar::csv
