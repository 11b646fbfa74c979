#include "xferlag/filename.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "xferlag/error.hpp"

namespace xferlag {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Consumes `<tag><digits>` at the front of `rest`.
bool take_group(std::string_view& rest, char tag, std::uint64_t& value) {
  if (rest.empty() || rest.front() != tag) return false;
  rest.remove_prefix(1);
  std::size_t n = 0;
  while (n < rest.size() && is_digit(rest[n])) ++n;
  if (n == 0) return false;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + n, value);
  if (ec != std::errc() || ptr != rest.data() + n) return false;
  rest.remove_prefix(n);
  return true;
}

bool take_char(std::string_view& rest, char c) {
  if (rest.empty() || rest.front() != c) return false;
  rest.remove_prefix(1);
  return true;
}

bool valid_extension(std::string_view ext) {
  if (ext.empty()) return false;
  for (char c : ext) {
    const auto u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '_')) return false;
  }
  return true;
}

}  // namespace

std::optional<FileNameParts> try_parse_filename(std::string_view name) noexcept {
  FileNameParts parts;
  std::string_view rest = name;
  if (!take_group(rest, 'e', parts.experiment_num) || !take_char(rest, '-') ||
      !take_group(rest, 'r', parts.run_num) || !take_char(rest, '-') ||
      !take_group(rest, 's', parts.stream_num) || !take_char(rest, '-') ||
      !take_group(rest, 'c', parts.chunk_num)) {
    return std::nullopt;
  }
  if (rest.empty()) return parts;
  if (!take_char(rest, '.') || !valid_extension(rest)) return std::nullopt;
  return parts;
}

FileNameParts parse_filename(std::string_view name) {
  if (auto parts = try_parse_filename(name)) return *parts;
  throw ParseError("malformed file name '" + std::string(name) + "'", std::string(name));
}

std::string format_filename(const FileNameParts& parts, std::string_view extension) {
  char buf[128];
  const int n = std::snprintf(buf, sizeof(buf), "e%04llu-r%04llu-s%02llu-c%02llu",
                              static_cast<unsigned long long>(parts.experiment_num),
                              static_cast<unsigned long long>(parts.run_num),
                              static_cast<unsigned long long>(parts.stream_num),
                              static_cast<unsigned long long>(parts.chunk_num));
  std::string out(buf, static_cast<std::size_t>(n));
  if (!extension.empty()) {
    out.push_back('.');
    out.append(extension);
  }
  return out;
}

}  // namespace xferlag
