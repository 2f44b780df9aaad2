#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace longrad {

// Minimal 8-bit grayscale PNG writer (zlib deflate, filter type 0).
void write_gray_png(const std::filesystem::path& path, const std::uint8_t* pixels,
                    int width, int height);

} // namespace longrad
