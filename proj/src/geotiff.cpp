#include "heatcast/geotiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <zlib.h>

#include "heatcast/common.hpp"

namespace heatcast {

namespace {

constexpr const char* kConvertHint =
    " (convert offline, e.g. gdal_translate -co COMPRESS=DEFLATE -ot Float32)";

struct TiffEntry {
  uint16_t type = 0;
  uint32_t count = 0;
  uint32_t value_or_offset = 0;  // raw little/big-endian handled by reader
};

class TiffReader {
 public:
  explicit TiffReader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("geotiff: cannot open '" + path + "'");
    bytes_.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
    if (bytes_.size() < 8) throw DataError("geotiff: '" + path + "' truncated");

    if (bytes_[0] == 'I' && bytes_[1] == 'I')
      big_endian_ = false;
    else if (bytes_[0] == 'M' && bytes_[1] == 'M')
      big_endian_ = true;
    else
      throw DataError("geotiff: '" + path + "' is not a TIFF file");

    const uint16_t magic = u16(2);
    if (magic == 43)
      throw DataError("geotiff: '" + path + "' is a BigTIFF, unsupported" +
                      kConvertHint);
    if (magic != 42)
      throw DataError("geotiff: '" + path + "' has bad TIFF magic");

    parse_ifd(u32(4));
  }

  uint16_t u16(size_t off) const {
    check(off, 2);
    return big_endian_
               ? uint16_t((bytes_[off] << 8) | bytes_[off + 1])
               : uint16_t(bytes_[off] | (bytes_[off + 1] << 8));
  }

  uint32_t u32(size_t off) const {
    check(off, 4);
    if (big_endian_)
      return (uint32_t(bytes_[off]) << 24) | (uint32_t(bytes_[off + 1]) << 16) |
             (uint32_t(bytes_[off + 2]) << 8) | uint32_t(bytes_[off + 3]);
    return uint32_t(bytes_[off]) | (uint32_t(bytes_[off + 1]) << 8) |
           (uint32_t(bytes_[off + 2]) << 16) | (uint32_t(bytes_[off + 3]) << 24);
  }

  double f64(size_t off) const {
    check(off, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      const size_t k = big_endian_ ? off + size_t(i) : off + size_t(7 - i);
      v = (v << 8) | bytes_[k];
    }
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }

  bool has(uint16_t tag) const { return entries_.count(tag) > 0; }

  // Integral tag values (BYTE/SHORT/LONG).
  std::vector<uint32_t> ints(uint16_t tag) const {
    const TiffEntry& e = entry(tag);
    const size_t elem = type_size(e.type);
    if (e.type != 1 && e.type != 3 && e.type != 4)
      throw DataError(strprintf("geotiff: '%s' tag %u has non-integer type",
                                path_.c_str(), tag));
    const size_t off = data_offset(e);
    std::vector<uint32_t> out;
    out.reserve(e.count);
    for (uint32_t i = 0; i < e.count; ++i) {
      const size_t p = off + size_t(i) * elem;
      if (elem == 1) {
        check(p, 1);
        out.push_back(bytes_[p]);
      } else if (elem == 2) {
        out.push_back(u16(p));
      } else {
        out.push_back(u32(p));
      }
    }
    return out;
  }

  uint32_t scalar(uint16_t tag, uint32_t fallback) const {
    if (!has(tag)) return fallback;
    return ints(tag).at(0);
  }

  std::vector<double> doubles(uint16_t tag) const {
    const TiffEntry& e = entry(tag);
    if (e.type != 12)
      throw DataError(strprintf("geotiff: '%s' tag %u is not DOUBLE",
                                path_.c_str(), tag));
    const size_t off = data_offset(e);
    std::vector<double> out;
    out.reserve(e.count);
    for (uint32_t i = 0; i < e.count; ++i) out.push_back(f64(off + size_t(i) * 8));
    return out;
  }

  std::string ascii(uint16_t tag) const {
    const TiffEntry& e = entry(tag);
    const size_t off = data_offset(e);
    check(off, e.count);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + off), e.count);
    while (!s.empty() && (s.back() == '\0' || s.back() == ' ')) s.pop_back();
    return s;
  }

  const uint8_t* raw(size_t off, size_t len) const {
    check(off, len);
    return bytes_.data() + off;
  }

  bool big_endian() const { return big_endian_; }
  const std::string& path() const { return path_; }

 private:
  void parse_ifd(uint32_t ifd_off) {
    const uint16_t n = u16(ifd_off);
    for (uint16_t i = 0; i < n; ++i) {
      const size_t e = size_t(ifd_off) + 2 + size_t(i) * 12;
      TiffEntry entry;
      const uint16_t tag = u16(e);
      entry.type = u16(e + 2);
      entry.count = u32(e + 4);
      entry.value_or_offset = uint32_t(e + 8);  // byte position of value field
      entries_[tag] = entry;
    }
    if (u32(size_t(ifd_off) + 2 + size_t(n) * 12) != 0)
      log_warn("geotiff: '" + path_ + "' has multiple IFDs; reading the first");
  }

  static size_t type_size(uint16_t type) {
    switch (type) {
      case 1:  // BYTE
      case 2:  // ASCII
        return 1;
      case 3:  // SHORT
        return 2;
      case 4:   // LONG
      case 11:  // FLOAT
        return 4;
      case 12:  // DOUBLE
        return 8;
      default:
        return 0;
    }
  }

  const TiffEntry& entry(uint16_t tag) const {
    auto it = entries_.find(tag);
    if (it == entries_.end())
      throw DataError(strprintf("geotiff: '%s' is missing required tag %u",
                                path_.c_str(), tag));
    return it->second;
  }

  // Values <= 4 bytes live inline in the entry, larger ones at an offset.
  size_t data_offset(const TiffEntry& e) const {
    const size_t total = type_size(e.type) * e.count;
    if (total == 0)
      throw DataError("geotiff: '" + path_ + "' has a tag with unknown type");
    if (total <= 4) return e.value_or_offset;
    return u32(e.value_or_offset);
  }

  void check(size_t off, size_t len) const {
    if (off + len > bytes_.size())
      throw DataError("geotiff: '" + path_ + "' truncated");
  }

  std::string path_;
  std::vector<uint8_t> bytes_;
  bool big_endian_ = false;
  std::map<uint16_t, TiffEntry> entries_;
};

std::vector<uint8_t> inflate_block(const uint8_t* src, size_t src_len,
                                   size_t expected, const std::string& path) {
  std::vector<uint8_t> out(expected);
  uLongf dst_len = uLongf(expected);
  const int rc = uncompress(out.data(), &dst_len, src, uLong(src_len));
  if (rc != Z_OK)
    throw DataError("geotiff: '" + path + "' deflate block failed to inflate");
  out.resize(dst_len);
  return out;
}

}  // namespace

GeoTiffData read_geotiff(const std::string& path) {
  TiffReader tiff(path);

  const int64_t cols = tiff.scalar(256, 0);
  const int64_t rows = tiff.scalar(257, 0);
  if (rows < 1 || cols < 1)
    throw DataError("geotiff: '" + path + "' has no image dimensions");

  const uint32_t spp = tiff.scalar(277, 1);
  std::vector<uint32_t> bits =
      tiff.has(258) ? tiff.ints(258) : std::vector<uint32_t>{1};
  for (uint32_t b : bits)
    if (b != bits[0])
      throw DataError("geotiff: '" + path + "' has mixed bit depths" +
                      kConvertHint);
  const uint32_t sample_format = tiff.scalar(339, 1);
  const uint32_t compression = tiff.scalar(259, 1);
  const uint32_t planar = tiff.scalar(284, 1);
  const uint32_t predictor = tiff.scalar(317, 1);

  if (planar != 1)
    throw DataError("geotiff: '" + path + "' uses planar layout, unsupported" +
                    kConvertHint);
  if (predictor != 1)
    throw DataError("geotiff: '" + path + "' uses a predictor, unsupported" +
                    kConvertHint);
  if (compression != 1 && compression != 8 && compression != 32946)
    throw DataError(strprintf("geotiff: '%s' compression %u unsupported%s",
                              path.c_str(), compression, kConvertHint));

  bool is_float;
  if (bits[0] == 32 && sample_format == 3)
    is_float = true;
  else if (bits[0] == 8 && (sample_format == 1 || sample_format == 4))
    is_float = false;
  else
    throw DataError(strprintf(
        "geotiff: '%s' sample type (%u bits, format %u) unsupported; only "
        "32-bit float and 8-bit class data are read%s",
        path.c_str(), bits[0], sample_format, kConvertHint));

  const size_t bytes_per_sample = is_float ? 4 : 1;
  const size_t row_bytes = size_t(cols) * spp * bytes_per_sample;

  // Interleaved pixel buffer, then split into bands.
  std::vector<uint8_t> raster(size_t(rows) * row_bytes);

  auto place_block = [&](const uint8_t* src, int64_t r0, int64_t c0,
                         int64_t block_rows, int64_t block_cols) {
    const size_t src_row_bytes = size_t(block_cols) * spp * bytes_per_sample;
    for (int64_t r = 0; r < block_rows; ++r) {
      if (r0 + r >= rows) break;
      const int64_t copy_cols = std::min(block_cols, cols - c0);
      if (copy_cols <= 0) break;
      std::memcpy(raster.data() + size_t(r0 + r) * row_bytes +
                      size_t(c0) * spp * bytes_per_sample,
                  src + size_t(r) * src_row_bytes,
                  size_t(copy_cols) * spp * bytes_per_sample);
    }
  };

  if (tiff.has(322)) {  // tiled
    const int64_t tw = tiff.scalar(322, 0);
    const int64_t th = tiff.scalar(323, 0);
    if (tw < 1 || th < 1)
      throw DataError("geotiff: '" + path + "' has bad tile dimensions");
    const auto offsets = tiff.ints(324);
    const auto counts = tiff.ints(325);
    const int64_t tiles_across = (cols + tw - 1) / tw;
    const int64_t tiles_down = (rows + th - 1) / th;
    if (int64_t(offsets.size()) != tiles_across * tiles_down)
      throw DataError("geotiff: '" + path + "' tile count mismatch");
    const size_t tile_bytes = size_t(tw) * size_t(th) * spp * bytes_per_sample;
    for (int64_t t = 0; t < tiles_across * tiles_down; ++t) {
      const int64_t r0 = (t / tiles_across) * th;
      const int64_t c0 = (t % tiles_across) * tw;
      const uint8_t* src = tiff.raw(offsets[size_t(t)], counts[size_t(t)]);
      if (compression == 1) {
        if (counts[size_t(t)] < tile_bytes)
          throw DataError("geotiff: '" + path + "' tile truncated");
        place_block(src, r0, c0, th, tw);
      } else {
        auto blk = inflate_block(src, counts[size_t(t)], tile_bytes, path);
        if (blk.size() != tile_bytes)
          throw DataError("geotiff: '" + path + "' tile has wrong size");
        place_block(blk.data(), r0, c0, th, tw);
      }
    }
  } else {  // striped
    const int64_t rows_per_strip = tiff.scalar(278, uint32_t(rows));
    const auto offsets = tiff.ints(273);
    const auto counts = tiff.ints(279);
    const int64_t strips = (rows + rows_per_strip - 1) / rows_per_strip;
    if (int64_t(offsets.size()) != strips || offsets.size() != counts.size())
      throw DataError("geotiff: '" + path + "' strip count mismatch");
    for (int64_t s = 0; s < strips; ++s) {
      const int64_t r0 = s * rows_per_strip;
      const int64_t strip_rows = std::min(rows_per_strip, rows - r0);
      const size_t strip_bytes = size_t(strip_rows) * row_bytes;
      const uint8_t* src = tiff.raw(offsets[size_t(s)], counts[size_t(s)]);
      if (compression == 1) {
        if (counts[size_t(s)] < strip_bytes)
          throw DataError("geotiff: '" + path + "' strip truncated");
        place_block(src, r0, 0, strip_rows, cols);
      } else {
        auto blk = inflate_block(src, counts[size_t(s)], strip_bytes, path);
        if (blk.size() != strip_bytes)
          throw DataError("geotiff: '" + path + "' strip has wrong size");
        place_block(blk.data(), r0, 0, strip_rows, cols);
      }
    }
  }

  // Geotransform.
  if (!tiff.has(33550) || !tiff.has(33922))
    throw DataError("geotiff: '" + path +
                    "' lacks ModelPixelScale/ModelTiepoint; not a supported "
                    "GeoTIFF" + kConvertHint);
  const auto scale = tiff.doubles(33550);
  const auto tiepoint = tiff.doubles(33922);
  if (scale.size() < 2 || tiepoint.size() < 6)
    throw DataError("geotiff: '" + path + "' has malformed geo tags");
  const double sx = scale[0], sy = scale[1];
  if (!(sx > 0) || !(sy > 0) || std::abs(sx - sy) > 1e-6 * sx)
    throw DataError(strprintf(
        "geotiff: '%s' has non-square pixels (%g x %g), unsupported%s",
        path.c_str(), sx, sy, kConvertHint));
  const double origin_x = tiepoint[3] - tiepoint[0] * sx;
  const double origin_y = tiepoint[4] + tiepoint[1] * sy;

  GeoTiffData data;
  data.grid.bbox.min_x = origin_x;
  data.grid.bbox.max_x = origin_x + double(cols) * sx;
  data.grid.bbox.max_y = origin_y;
  data.grid.bbox.min_y = origin_y - double(rows) * sy;
  data.grid.resolution = sx;
  data.grid.rows = rows;
  data.grid.cols = cols;
  data.is_float = is_float;

  // CRS id from the GeoKey directory when present.
  data.grid.bbox.crs_id = "unknown";
  if (tiff.has(34735)) {
    const auto keys = tiff.ints(34735);
    uint32_t projected = 0, geographic = 0;
    for (size_t i = 4; i + 3 < keys.size(); i += 4) {
      if (keys[i] == 3072 && keys[i + 1] == 0) projected = keys[i + 3];
      if (keys[i] == 2048 && keys[i + 1] == 0) geographic = keys[i + 3];
    }
    if (projected)
      data.grid.bbox.crs_id = "EPSG:" + std::to_string(projected);
    else if (geographic)
      data.grid.bbox.crs_id = "EPSG:" + std::to_string(geographic);
  }

  if (tiff.has(42113)) {
    try {
      data.nodata = std::stof(tiff.ascii(42113));
    } catch (const std::exception&) {
      log_warn("geotiff: '" + path + "' has unparsable GDAL_NODATA; ignored");
    }
  }

  // De-interleave into band-sequential storage.
  const size_t pixels = size_t(rows) * size_t(cols);
  if (is_float) {
    data.float_bands.assign(spp, std::vector<float>(pixels));
    for (size_t p = 0; p < pixels; ++p)
      for (uint32_t b = 0; b < spp; ++b) {
        const size_t off = (p * spp + b) * 4;
        uint32_t v;
        if (tiff.big_endian())
          v = (uint32_t(raster[off]) << 24) | (uint32_t(raster[off + 1]) << 16) |
              (uint32_t(raster[off + 2]) << 8) | uint32_t(raster[off + 3]);
        else
          v = uint32_t(raster[off]) | (uint32_t(raster[off + 1]) << 8) |
              (uint32_t(raster[off + 2]) << 16) | (uint32_t(raster[off + 3]) << 24);
        float f;
        std::memcpy(&f, &v, 4);
        data.float_bands[b][p] = f;
      }
  } else {
    data.byte_bands.assign(spp, std::vector<uint8_t>(pixels));
    for (size_t p = 0; p < pixels; ++p)
      for (uint32_t b = 0; b < spp; ++b)
        data.byte_bands[b][p] = raster[p * spp + b];
  }
  return data;
}

std::vector<RasterLayer> geotiff_layers(const GeoTiffData& data) {
  if (!data.is_float)
    throw DataError("geotiff_layers: file holds class data, not float bands");
  std::vector<RasterLayer> layers;
  for (const auto& band : data.float_bands) {
    RasterLayer layer(data.grid);
    layer.values = band;
    for (size_t i = 0; i < band.size(); ++i) {
      const bool bad = std::isnan(band[i]) ||
                       (data.nodata && band[i] == *data.nodata);
      layer.valid[i] = bad ? 0 : 1;
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

ClassRaster geotiff_classes(const GeoTiffData& data, int band) {
  if (data.is_float)
    throw DataError("geotiff_classes: file holds float bands, not class data");
  if (band < 0 || band >= int(data.byte_bands.size()))
    throw DataError("geotiff_classes: band index out of range");
  ClassRaster cr;
  cr.grid = data.grid;
  cr.classes = data.byte_bands[size_t(band)];
  return cr;
}

}  // namespace heatcast
