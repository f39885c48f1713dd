#ifndef PIPELAYOUT_IO_HPP_
#define PIPELAYOUT_IO_HPP_

#include <string>
#include <string_view>

namespace pipelayout {

// Whole-file read; throws std::runtime_error on failure.
std::string read_file(const std::string& path);

// Write via temp file + rename so readers never see a partial file.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace pipelayout

#endif  // PIPELAYOUT_IO_HPP_
