#include "vidreason/io.hpp"

#include <fstream>
#include <sstream>

#include "vidreason/error.hpp"

namespace vidreason {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file", path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open file for writing", path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw RuntimeError("write failed", path.string());
}

}  // namespace vidreason
