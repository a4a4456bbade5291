#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace vlf {

uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
// Trims whitespace plus sentence punctuation and markdown dressing at both ends.
std::string trim_punct(std::string_view s);

// Glob-style match supporting '*' and '?'.
bool wildcard_match(std::string_view pattern, std::string_view name);

std::string base64_encode(std::string_view bytes);

// Runs fn(i) for i in [0, count) on up to `parallelism` worker threads.
// The first captured exception is rethrown after all workers join.
void parallel_for(size_t count, size_t parallelism, const std::function<void(size_t)>& fn);

}  // namespace vlf
