#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xferlag {

// Components of a data-acquisition file name `e<exp>-r<run>-s<stream>-c<chunk>[.<ext>]`.
struct FileNameParts {
  std::uint64_t experiment_num = 0;
  std::uint64_t run_num = 0;
  std::uint64_t stream_num = 0;
  std::uint64_t chunk_num = 0;

  friend bool operator==(const FileNameParts&, const FileNameParts&) = default;
};

// Throws ParseError carrying the offending name. Digit groups may be
// zero-padded to any width; the extension, when present, is [A-Za-z0-9_]+.
FileNameParts parse_filename(std::string_view name);

// Non-throwing variant for feature derivation, where a bad name just means
// missing chunk/stream features.
std::optional<FileNameParts> try_parse_filename(std::string_view name) noexcept;

// Canonical form: experiment and run zero-padded to 4 digits, stream and chunk to 2.
std::string format_filename(const FileNameParts& parts, std::string_view extension = "xtc");

}  // namespace xferlag
