#include "heatcast/image.hpp"

#include <cstring>
#include <fstream>

#include <zlib.h>

#include "heatcast/common.hpp"

namespace heatcast {

std::array<uint8_t, 3> thermal_color(double t) {
  // navy -> blue -> cyan -> yellow -> orange -> red
  static const double stops[6][3] = {{0.05, 0.05, 0.35}, {0.10, 0.30, 0.85},
                                     {0.15, 0.80, 0.90}, {0.95, 0.90, 0.25},
                                     {0.95, 0.55, 0.10}, {0.75, 0.05, 0.05}};
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double pos = t * 5.0;
  const int i = pos >= 5.0 ? 4 : int(pos);
  const double f = pos - i;
  std::array<uint8_t, 3> rgb;
  for (int k = 0; k < 3; ++k) {
    const double v = stops[i][k] + f * (stops[i + 1][k] - stops[i][k]);
    rgb[size_t(k)] = uint8_t(v * 255.0 + 0.5);
  }
  return rgb;
}

static void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

static void put_chunk(std::vector<uint8_t>& out, const char type[4],
                      const std::vector<uint8_t>& data) {
  put_u32_be(out, uint32_t(data.size()));
  const size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uint32_t crc = uint32_t(
      crc32(0, out.data() + type_pos, uInt(4 + data.size())));
  put_u32_be(out, crc);
}

void write_png(const std::string& path, const RgbImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != size_t(image.width * image.height * 3))
    throw DataError("write_png: malformed image buffer");

  // filter byte 0 before each scanline
  std::vector<uint8_t> raw;
  raw.reserve(size_t(image.height) * (size_t(image.width) * 3 + 1));
  for (int64_t y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = image.pixels.data() + size_t(y * image.width) * 3;
    raw.insert(raw.end(), row, row + size_t(image.width) * 3);
  }

  uLongf comp_cap = compressBound(uLong(raw.size()));
  std::vector<uint8_t> comp(comp_cap);
  if (compress2(comp.data(), &comp_cap, raw.data(), uLong(raw.size()),
                Z_BEST_SPEED) != Z_OK)
    throw DataError("write_png: deflate failed");
  comp.resize(comp_cap);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<uint8_t> ihdr;
  put_u32_be(ihdr, uint32_t(image.width));
  put_u32_be(ihdr, uint32_t(image.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor RGB
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", comp);
  put_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_png: cannot open '" + path + "'");
  f.write(reinterpret_cast<const char*>(out.data()),
          std::streamsize(out.size()));
}

namespace {

struct Glyph {
  char ch;
  uint8_t rows[7];  // 5 LSBs per row, MSB-first within the 5 bits
};

constexpr Glyph kGlyphs[] = {
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
    {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
    {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
    {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'I', {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'X', {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11}},
    {'C', {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char ch) {
  for (const Glyph& g : kGlyphs)
    if (g.ch == ch) return &g;
  return nullptr;
}

}  // namespace

void draw_text(RgbImage& image, int64_t x, int64_t y, const std::string& text,
               std::array<uint8_t, 3> rgb, int scale) {
  int64_t cx = x;
  for (char ch : text) {
    const Glyph* g = find_glyph(ch);
    if (g) {
      for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 5; ++c)
          if (g->rows[r] & (1 << (4 - c)))
            for (int sy = 0; sy < scale; ++sy)
              for (int sx = 0; sx < scale; ++sx)
                image.set(cx + c * scale + sx, y + r * scale + sy, rgb);
    }
    cx += 6 * scale;
  }
}

}  // namespace heatcast
