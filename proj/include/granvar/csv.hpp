#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace granvar::csv {

/// Shortest round-trip-safe text for a double: 17 significant digits.
std::string number(double v);
std::string number(std::int64_t v);
inline std::string number(int v) { return number(static_cast<std::int64_t>(v)); }
inline std::string number(std::size_t v) { return number(static_cast<std::int64_t>(v)); }

/// Scientific notation with `digits` significant figures, rounding the exact
/// binary value half away from zero: 0.0625 -> "6.3e-02". Zero gives "0".
std::string significant(double v, int digits);

/// FNV-1a 64-bit, printed as 16 hex digits by hex64().
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Line-oriented CSV writer. Fields are written verbatim; callers only emit
/// numbers and identifier-like strings.
class Writer {
 public:
  /// Opens `path` for writing; throws std::runtime_error on failure. A
  /// non-empty `comment` becomes a leading `# ...` line.
  Writer(const std::filesystem::path& path, const std::string& comment);

  Writer& header(std::initializer_list<std::string_view> names);
  Writer& header(const std::vector<std::string>& names);
  Writer& row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

/// Rows of a CSV file, skipping blank lines and lines starting with '#'.
std::vector<std::vector<std::string>> read(const std::filesystem::path& path);

}  // namespace granvar::csv
