#pragma once

#include <filesystem>

#include "lmfcn/tensor.hpp"

namespace lmfcn {

/// Reads any PNG as 3-channel RGB in [0, 1]; gray is replicated, alpha dropped.
Image read_png(const std::filesystem::path& path);

/// Writes a 1- or 3-channel image as 8-bit PNG, rounding v * 255.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace lmfcn
