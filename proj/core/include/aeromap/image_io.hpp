#pragma once

#include <cstdint>
#include <filesystem>

#include "aeromap/image.hpp"

namespace aeromap {

/// BT.601 luma: round(0.299 r + 0.587 g + 0.114 b), saturated.
std::uint8_t to_gray(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

/// Reads a binary PGM (P5, maxval 255) or an 8-bit gray/RGB PNG.
/// Throws Error with FileNotFound, UnsupportedFormat or CorruptImage.
ImageGray load_image(const std::filesystem::path& path);

/// Writes PNG or PGM depending on the extension (.png, .pgm). Throws
/// Error(IoError) on failure.
void save_image(const std::filesystem::path& path, const ImageGray& img);

}  // namespace aeromap
