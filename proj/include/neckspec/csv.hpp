#pragma once

#include <filesystem>
#include <string>

namespace neckspec {

// Writes to <file>.tmp and renames, so a failed run never leaves a partial file.
void atomic_write(const std::filesystem::path& file, const std::string& contents);

// %.17g, '.' decimal regardless of locale
std::string fmt(double x);

}  // namespace neckspec
