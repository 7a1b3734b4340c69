#include "aeromap/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "aeromap/error.hpp"

namespace aeromap {
namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token, skipping '#' comments.
bool next_token(const std::vector<std::uint8_t>& buf, std::size_t& pos, std::string& tok) {
  tok.clear();
  while (pos < buf.size()) {
    const char c = static_cast<char>(buf[pos]);
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < buf.size() && !std::isspace(buf[pos])) tok.push_back(static_cast<char>(buf[pos++]));
  return !tok.empty();
}

int parse_header_int(const std::string& tok, const std::filesystem::path& path) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), ::isdigit) || tok.size() > 9) {
    throw Error(ErrorCode::CorruptImage, "bad PGM header field in " + path.string());
  }
  return std::stoi(tok);
}

ImageGray decode_pgm(const std::vector<std::uint8_t>& buf, const std::filesystem::path& path) {
  std::size_t pos = 0;
  std::string tok;
  if (!next_token(buf, pos, tok) || tok != "P5") {
    throw Error(ErrorCode::UnsupportedFormat, "not a binary PGM: " + path.string());
  }
  std::array<int, 3> fields{};
  for (int& f : fields) {
    if (!next_token(buf, pos, tok)) throw Error(ErrorCode::CorruptImage, "truncated PGM header");
    f = parse_header_int(tok, path);
  }
  const auto [w, h, maxval] = fields;
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedFormat, "PGM maxval must be 255: " + path.string());
  }
  if (w < 1 || h < 1) throw Error(ErrorCode::CorruptImage, "PGM with zero dimension");
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (pos > buf.size() || buf.size() - pos < n) {
    throw Error(ErrorCode::CorruptImage, "PGM payload shorter than header declares: " + path.string());
  }
  return ImageGray(w, h, std::vector<std::uint8_t>(buf.begin() + pos, buf.begin() + pos + n));
}

ImageGray decode_png(const std::vector<std::uint8_t>& buf, const std::filesystem::path& path) {
  // IHDR must be the first chunk: bit depth at byte 24, colour type at 25.
  if (buf.size() < 33) throw Error(ErrorCode::CorruptImage, "truncated PNG header: " + path.string());
  const int bit_depth = buf[24];
  const int color_type = buf[25];
  if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
    throw Error(ErrorCode::UnsupportedFormat,
                "only 8-bit gray or RGB PNG is supported: " + path.string());
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, buf.data(), buf.size())) {
    throw Error(ErrorCode::CorruptImage, std::string(image.message) + ": " + path.string());
  }
  const bool rgb = color_type == PNG_COLOR_TYPE_RGB;
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::CorruptImage, msg + ": " + path.string());
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  if (!rgb) return ImageGray(w, h, std::move(pixels));

  ImageGray out(w, h);
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = to_gray(pixels[3 * i], pixels[3 * i + 1], pixels[3 * i + 2]);
  }
  return out;
}

}  // namespace

std::uint8_t to_gray(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return saturate_u8(0.299 * r + 0.587 * g + 0.114 * b);
}

ImageGray load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::FileNotFound, path.string());
  const auto buf = read_all(path);
  static constexpr std::array<std::uint8_t, 8> kPngSig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (buf.size() >= kPngSig.size() && std::equal(kPngSig.begin(), kPngSig.end(), buf.begin())) {
    return decode_png(buf, path);
  }
  if (buf.size() >= 2 && buf[0] == 'P') return decode_pgm(buf, path);
  throw Error(ErrorCode::UnsupportedFormat, "unrecognised image format: " + path.string());
}

void save_image(const std::filesystem::path& path, const ImageGray& img) {
  if (img.empty()) throw Error(ErrorCode::IoError, "cannot write an empty image: " + path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + path.string());
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels().data()),
              static_cast<std::streamsize>(img.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
    return;
  }
  if (ext != ".png") {
    throw Error(ErrorCode::UnsupportedFormat, "output must be .png or .pgm: " + path.string());
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.pixels().data(), 0,
                               nullptr)) {
    throw Error(ErrorCode::IoError, std::string(image.message) + ": " + path.string());
  }
}

}  // namespace aeromap
