#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace vidreason {

// Whole-file read; throws ParseError naming the path when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

// Truncating write; throws RuntimeError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace vidreason
