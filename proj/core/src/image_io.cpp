#include "reld/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "reld/errors.hpp"

namespace reld {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

[[noreturn]] void io_fail(const std::filesystem::path& path, const std::string& why) {
  throw IoError(path.string() + ": " + why);
}

unsigned quantize(double v, unsigned max_value) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned>(std::floor(c * max_value + 0.5));
}

// ---------------------------------------------------------------- PNG

struct PngReadState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadState() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) io_fail(path, "cannot open for reading");

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    io_fail(path, "not a PNG file");

  PngReadState st;
  st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!st.png) io_fail(path, "png_create_read_struct failed");
  st.info = png_create_info_struct(st.png);
  if (!st.info) io_fail(path, "png_create_info_struct failed");

  // Everything libpng can longjmp over is declared before setjmp.
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  bool bad_depth = false;

  if (setjmp(png_jmpbuf(st.png))) io_fail(path, "corrupt PNG data");

  png_init_io(st.png, fp.get());
  png_set_sig_bytes(st.png, 8);
  png_read_info(st.png, st.info);
  png_get_IHDR(st.png, st.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr,
               nullptr);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(st.png);
    bit_depth = 8;
  } else if (bit_depth != 8 && bit_depth != 16) {
    bad_depth = true;
  }
  if (!bad_depth) {
    if (png_get_valid(st.png, st.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(st.png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(st.png, st.info, PNG_INFO_tRNS))
      png_set_strip_alpha(st.png);
    png_read_update_info(st.png, st.info);
    const auto row_bytes = png_get_rowbytes(st.png, st.info);
    buffer.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * row_bytes;
    png_read_image(st.png, rows.data());
    png_read_end(st.png, nullptr);
  }
  if (bad_depth) io_fail(path, "unsupported bit depth " + std::to_string(bit_depth));

  const int channels = png_get_channels(st.png, st.info);
  if (channels != 1 && channels != 3) io_fail(path, "unsupported channel count");

  Image img(Shape{static_cast<int>(height), static_cast<int>(width), channels});
  const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
  auto d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    unsigned v = bit_depth == 16 ? (static_cast<unsigned>(buffer[2 * i]) << 8) | buffer[2 * i + 1]
                                 : buffer[i];
    d[i] = v / max_value;
  }
  return img;
}

struct PngWriteState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteState() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

void save_png(const Image& image, const std::filesystem::path& path, int bit_depth) {
  const unsigned max_value = bit_depth == 16 ? 65535u : 255u;
  const std::size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
  const auto h = static_cast<std::size_t>(image.height());
  const std::size_t row_bytes =
      static_cast<std::size_t>(image.width()) * image.channels() * bytes_per_sample;

  std::vector<png_byte> buffer(row_bytes * h);
  const auto d = image.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const unsigned q = quantize(d[i], max_value);
    if (bit_depth == 16) {
      buffer[2 * i] = static_cast<png_byte>(q >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(q & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(q);
    }
  }
  std::vector<png_bytep> rows(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = buffer.data() + y * row_bytes;

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) io_fail(path, "cannot open for writing");

  PngWriteState st;
  st.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!st.png) io_fail(path, "png_create_write_struct failed");
  st.info = png_create_info_struct(st.png);
  if (!st.info) io_fail(path, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(st.png))) io_fail(path, "PNG encoding failed");

  png_init_io(st.png, fp.get());
  png_set_IHDR(st.png, st.info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), bit_depth,
               image.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(st.png, st.info);
  png_write_image(st.png, rows.data());
  png_write_end(st.png, nullptr);
}

// ---------------------------------------------------------------- PNM

class PnmTokenizer {
 public:
  explicit PnmTokenizer(std::istream& in) : in_(in) {}

  long next_int() {
    skip_space_and_comments();
    long v = 0;
    bool any = false;
    while (std::isdigit(in_.peek())) {
      v = v * 10 + (in_.get() - '0');
      any = true;
    }
    if (!any) throw std::runtime_error("expected integer");
    return v;
  }

 private:
  void skip_space_and_comments() {
    for (;;) {
      const int c = in_.peek();
      if (c == '#') {
        std::string line;
        std::getline(in_, line);
      } else if (std::isspace(c)) {
        in_.get();
      } else {
        return;
      }
    }
  }
  std::istream& in_;
};

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '3' && magic[1] != '5' && magic[1] != '6'))
    io_fail(path, "not a PGM/PPM file");
  const bool ascii = magic[1] == '2' || magic[1] == '3';
  const int channels = (magic[1] == '3' || magic[1] == '6') ? 3 : 1;

  long width = 0, height = 0, maxval = 0;
  PnmTokenizer tok(in);
  try {
    width = tok.next_int();
    height = tok.next_int();
    maxval = tok.next_int();
  } catch (const std::exception&) {
    io_fail(path, "malformed PNM header");
  }
  if (width <= 0 || height <= 0) io_fail(path, "invalid PNM dimensions");
  if (maxval <= 0 || maxval > 65535) io_fail(path, "unsupported PNM maxval " + std::to_string(maxval));

  Image img(Shape{static_cast<int>(height), static_cast<int>(width), channels});
  auto d = img.data();
  const double scale = 1.0 / static_cast<double>(maxval);
  if (ascii) {
    try {
      for (auto& v : d) {
        const long s = tok.next_int();
        if (s > maxval) io_fail(path, "sample exceeds maxval");
        v = s * scale;
      }
    } catch (const std::runtime_error& e) {
      if (dynamic_cast<const IoError*>(&e)) throw;
      io_fail(path, "truncated PNM data");
    }
    return img;
  }

  in.get();  // single whitespace byte after maxval
  const std::size_t bps = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(d.size() * bps);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) io_fail(path, "truncated PNM data");
  for (std::size_t i = 0; i < d.size(); ++i) {
    const unsigned s = bps == 2 ? (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
    d[i] = s * scale;
  }
  return img;
}

void save_pnm(const Image& image, const std::filesystem::path& path, int bit_depth) {
  const unsigned max_value = bit_depth == 16 ? 65535u : 255u;
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail(path, "cannot open for writing");
  out << (image.channels() == 3 ? "P6" : "P5") << "\n"
      << image.width() << " " << image.height() << "\n"
      << max_value << "\n";
  const auto d = image.data();
  std::vector<unsigned char> raw;
  raw.reserve(d.size() * (bit_depth == 16 ? 2 : 1));
  for (double v : d) {
    const unsigned q = quantize(v, max_value);
    if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) io_fail(path, "write failed");
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
  io_fail(path, "unrecognized image extension '" + ext + "'");
}

void save_image(const Image& image, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    io_fail(path, "unsupported bit depth " + std::to_string(bit_depth));
  const auto ext = lower_extension(path);
  if (ext == ".png") return save_png(image, path, bit_depth);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return save_pnm(image, path, bit_depth);
  io_fail(path, "unrecognized image extension '" + ext + "'");
}

}  // namespace reld
