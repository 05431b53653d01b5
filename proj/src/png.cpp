#include "sepipe/png.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <vector>

#include "sepipe/common.hpp"

namespace sepipe {

namespace {

void put_u32(std::vector<unsigned char>& v, uint32_t x) {
  v.push_back((x >> 24) & 0xff);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back(x & 0xff);
}

void put_chunk(std::vector<unsigned char>& out, const char type[4],
               const std::vector<unsigned char>& body) {
  put_u32(out, static_cast<uint32_t>(body.size()));
  std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), body.begin(), body.end());
  uint32_t crc = crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
  put_u32(out, crc);
}

}  // namespace

void write_png_gray8(const std::string& path, const unsigned char* pixels, int width, int height) {
  require(width > 0 && height > 0, "png: empty image");

  // One filter byte (0 = none) per scanline.
  std::vector<unsigned char> raw(static_cast<std::size_t>(height) * (width + 1));
  for (int y = 0; y < height; ++y) {
    raw[static_cast<std::size_t>(y) * (width + 1)] = 0;
    std::memcpy(raw.data() + static_cast<std::size_t>(y) * (width + 1) + 1,
                pixels + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width));
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_len);
  require_runtime(
      compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) == Z_OK,
      "png: deflate failed");
  comp.resize(comp_len);

  std::vector<unsigned char> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<unsigned char> ihdr;
  put_u32(ihdr, static_cast<uint32_t>(width));
  put_u32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // color type: grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", comp);
  put_chunk(out, "IEND", {});

  std::FILE* f = std::fopen(path.c_str(), "wb");
  require_runtime(f != nullptr, "cannot open for writing: " + path);
  std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);
}

}  // namespace sepipe
