#pragma once

#include <string>

namespace sepipe {

// Minimal 8-bit grayscale PNG writer (zlib-deflated, filter type 0).
void write_png_gray8(const std::string& path, const unsigned char* pixels, int width, int height);

}  // namespace sepipe
