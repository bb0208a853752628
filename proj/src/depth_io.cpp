#include "plin/depth_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "plin/errors.hpp"

namespace plin {

namespace {

struct ByteReader {
  const std::uint8_t* p;
  std::size_t len;
  std::size_t off = 0;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t count) {
  auto* r = static_cast<ByteReader*>(png_get_io_ptr(png));
  if (r->off + count > r->len) {
    png_error(png, "truncated PNG stream");
    return;
  }
  std::memcpy(out, r->p + r->off, count);
  r->off += count;
}

void png_write_cb(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_flush_cb(png_structp) {}

// Decodes into row-packed bytes; want_bit_depth is 16 (gray) or 8 (rgb).
void decode_png_rows(const std::vector<std::uint8_t>& bytes, int want_color,
                     int want_bit_depth, bool permissive_color, int& w, int& h,
                     std::vector<std::uint8_t>& rows, std::size_t& row_bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw DataError("decode_png: not a PNG stream");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError("decode_png: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("decode_png: libpng init failed");
  }

  ByteReader reader{bytes.data(), bytes.size()};
  std::vector<png_bytep> row_ptrs;
  // 0 ok, 1 corrupt stream, 2 wrong depth format
  volatile int status = 0;

  if (setjmp(png_jmpbuf(png))) {
    status = 1;
  } else {
    png_set_read_fn(png, &reader, png_read_cb);
    png_read_info(png, info);

    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);
    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));

    if (permissive_color) {
      // Color path: normalize whatever we got to RGB8.
      if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
      if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
      if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
      if (bit_depth == 16) png_set_strip_16(png);
      if (color_type == PNG_COLOR_TYPE_GRAY ||
          color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
      if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
      png_read_update_info(png, info);
    } else if (color_type != want_color || bit_depth != want_bit_depth) {
      status = 2;
    }

    if (status == 0) {
      row_bytes = png_get_rowbytes(png, info);
      rows.assign(row_bytes * h, 0);
      row_ptrs.resize(h);
      for (int v = 0; v < h; ++v) row_ptrs[v] = rows.data() + row_bytes * v;
      png_read_image(png, row_ptrs.data());
      png_read_end(png, nullptr);
    }
  }

  png_destroy_read_struct(&png, &info, nullptr);
  if (status == 1) throw DataError("decode_png: corrupt PNG stream");
  if (status == 2)
    throw DataError("decode_depth_png: expected single-channel 16-bit PNG");
}

std::vector<std::uint8_t> encode_png_rows(int w, int h, int color_type,
                                          int bit_depth,
                                          const std::vector<std::uint8_t>& rows,
                                          std::size_t row_bytes) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError("encode_png: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("encode_png: libpng init failed");
  }

  std::vector<std::uint8_t> out;
  std::vector<png_bytep> row_ptrs(h);
  bool failed = false;

  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_set_write_fn(png, &out, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int v = 0; v < h; ++v)
      row_ptrs[v] = const_cast<png_bytep>(rows.data() + row_bytes * v);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
  }

  png_destroy_write_struct(&png, &info);
  if (failed) throw DataError("encode_png: libpng write failed");
  return out;
}

}  // namespace

DepthMap decode_depth_png(const std::vector<std::uint8_t>& bytes) {
  int w = 0, h = 0;
  std::vector<std::uint8_t> rows;
  std::size_t row_bytes = 0;
  decode_png_rows(bytes, PNG_COLOR_TYPE_GRAY, 16, false, w, h, rows, row_bytes);

  DepthMap d(w, h, DepthKind::Sparse);
  for (int v = 0; v < h; ++v) {
    const std::uint8_t* row = rows.data() + row_bytes * v;
    for (int u = 0; u < w; ++u) {
      // PNG 16-bit samples are big-endian.
      const unsigned stored = (unsigned(row[2 * u]) << 8) | row[2 * u + 1];
      if (stored == 0) continue;
      d.grid.at(u, v) = stored / kDepthCodecScale;
      d.mask.set(u, v, true);
    }
  }
  return d;
}

std::vector<std::uint8_t> encode_depth_png(const DepthMap& d) {
  const int w = d.width(), h = d.height();
  const std::size_t row_bytes = static_cast<std::size_t>(w) * 2;
  std::vector<std::uint8_t> rows(row_bytes * h, 0);
  for (int v = 0; v < h; ++v) {
    std::uint8_t* row = rows.data() + row_bytes * v;
    for (int u = 0; u < w; ++u) {
      if (!d.mask.get(u, v)) continue;
      const double depth = d.grid.at(u, v);
      if (!(depth > 0.0))
        throw DataError("encode_depth_png: valid pixel with non-positive depth");
      if (depth > kMaxCodecDepth)
        throw DataError("encode_depth_png: depth exceeds codec range");
      long long stored = std::llround(depth * kDepthCodecScale);
      if (stored < 1) stored = 1;  // keep the mask intact for tiny depths
      if (stored > 65535) stored = 65535;
      row[2 * u] = static_cast<std::uint8_t>(stored >> 8);
      row[2 * u + 1] = static_cast<std::uint8_t>(stored & 0xff);
    }
  }
  return encode_png_rows(w, h, PNG_COLOR_TYPE_GRAY, 16, rows, row_bytes);
}

ColorImage decode_color_png(const std::vector<std::uint8_t>& bytes) {
  int w = 0, h = 0;
  std::vector<std::uint8_t> rows;
  std::size_t row_bytes = 0;
  decode_png_rows(bytes, PNG_COLOR_TYPE_RGB, 8, true, w, h, rows, row_bytes);

  ColorImage c(w, h);
  for (int v = 0; v < h; ++v) {
    const std::uint8_t* row = rows.data() + row_bytes * v;
    for (int u = 0; u < w; ++u)
      for (int ch = 0; ch < 3; ++ch)
        c.grid.at(u, v, ch) = row[3 * u + ch] / 255.0;
  }
  return c;
}

std::vector<std::uint8_t> encode_color_png(const ColorImage& c) {
  const int w = c.width(), h = c.height();
  const std::size_t row_bytes = static_cast<std::size_t>(w) * 3;
  std::vector<std::uint8_t> rows(row_bytes * h, 0);
  for (int v = 0; v < h; ++v) {
    std::uint8_t* row = rows.data() + row_bytes * v;
    for (int u = 0; u < w; ++u) {
      for (int ch = 0; ch < 3; ++ch) {
        double x = c.grid.at(u, v, ch);
        if (x < 0.0) x = 0.0;
        if (x > 1.0) x = 1.0;
        row[3 * u + ch] = static_cast<std::uint8_t>(std::lround(x * 255.0));
      }
    }
  }
  return encode_png_rows(w, h, PNG_COLOR_TYPE_RGB, 8, rows, row_bytes);
}

namespace {

void check_crop(int w, int h, int tw, int th) {
  if (tw < 1 || th < 1 || tw > w || th > h)
    throw std::invalid_argument("bottom_crop: target larger than source");
}

Grid2D crop_grid(const Grid2D& g, int tw, int th, int& u0, int& v0) {
  u0 = (g.width - tw) / 2;
  v0 = g.height - th;
  Grid2D out(tw, th, g.channels);
  for (int v = 0; v < th; ++v)
    for (int u = 0; u < tw; ++u)
      for (int c = 0; c < g.channels; ++c)
        out.at(u, v, c) = g.at(u + u0, v + v0, c);
  return out;
}

}  // namespace

DepthMap bottom_crop(const DepthMap& d, int target_w, int target_h) {
  check_crop(d.width(), d.height(), target_w, target_h);
  DepthMap out(target_w, target_h, d.kind);
  int u0 = 0, v0 = 0;
  out.grid = crop_grid(d.grid, target_w, target_h, u0, v0);
  for (int v = 0; v < target_h; ++v)
    for (int u = 0; u < target_w; ++u)
      out.mask.set(u, v, d.mask.get(u + u0, v + v0));
  return out;
}

ColorImage bottom_crop(const ColorImage& c, int target_w, int target_h) {
  check_crop(c.width(), c.height(), target_w, target_h);
  ColorImage out(target_w, target_h);
  int u0 = 0, v0 = 0;
  out.grid = crop_grid(c.grid, target_w, target_h, u0, v0);
  return out;
}

void drop_nonpositive(DepthMap& d) {
  for (int v = 0; v < d.height(); ++v) {
    for (int u = 0; u < d.width(); ++u) {
      if (d.mask.get(u, v) && !(d.grid.at(u, v) > 0.0)) {
        d.mask.set(u, v, false);
        d.grid.at(u, v) = 0.0;
      }
    }
  }
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::string& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write: " + path);
}

DepthMap read_depth_png(const std::string& path) {
  return decode_depth_png(read_file(path));
}

void write_depth_png(const std::string& path, const DepthMap& d) {
  write_file(path, encode_depth_png(d));
}

ColorImage read_color_png(const std::string& path) {
  return decode_color_png(read_file(path));
}

void write_color_png(const std::string& path, const ColorImage& c) {
  write_file(path, encode_color_png(c));
}

}  // namespace plin
