#include "dedup/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "dedup/error.hpp"

namespace dedup {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw InvalidInput("cannot open '" + path.string() + "': " + std::strerror(errno));
  }
  return f;
}

constexpr std::array<unsigned char, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::optional<ImageInfo> probe_png(std::ifstream& in) {
  // Signature, IHDR length and tag, width, height.
  std::array<unsigned char, 24> head{};
  if (!in.read(reinterpret_cast<char*>(head.data()), head.size())) return std::nullopt;
  if (!std::equal(kPngSignature.begin(), kPngSignature.end(), head.begin())) return std::nullopt;
  if (std::memcmp(head.data() + 12, "IHDR", 4) != 0) return std::nullopt;
  const std::uint32_t w = be32(head.data() + 16);
  const std::uint32_t h = be32(head.data() + 20);
  if (w == 0 || h == 0) return std::nullopt;
  return ImageInfo{ImageFormat::Png, w, h};
}

std::optional<ImageInfo> probe_jpeg(std::ifstream& in) {
  auto byte = [&]() -> int {
    const int c = in.get();
    return in ? c : -1;
  };
  if (byte() != 0xFF || byte() != 0xD8) return std::nullopt;
  while (true) {
    int marker = byte();
    if (marker != 0xFF) return std::nullopt;
    while (marker == 0xFF) marker = byte();
    if (marker < 0) return std::nullopt;
    if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) continue;
    if (marker == 0xD9 || marker == 0xDA) return std::nullopt;  // no frame header before scan
    const int hi = byte(), lo = byte();
    if (hi < 0 || lo < 0) return std::nullopt;
    const int length = (hi << 8) | lo;
    if (length < 2) return std::nullopt;
    const bool frame = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
    if (frame) {
      std::array<unsigned char, 5> sof{};
      if (!in.read(reinterpret_cast<char*>(sof.data()), sof.size())) return std::nullopt;
      const std::size_t h = (std::size_t{sof[1]} << 8) | sof[2];
      const std::size_t w = (std::size_t{sof[3]} << 8) | sof[4];
      if (w == 0 || h == 0) return std::nullopt;
      return ImageInfo{ImageFormat::Jpeg, w, h};
    }
    in.seekg(length - 2, std::ios::cur);
    if (!in) return std::nullopt;
  }
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const std::string message = image.message;
    png_image_free(&image);
    throw InvalidInput("corrupt PNG '" + path.string() + "': " + message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw InvalidInput("corrupt PNG '" + path.string() + "': " + message);
  }
  std::vector<Rgb> pixels(std::size_t{image.width} * image.height);
  std::memcpy(pixels.data(), buffer.data(), pixels.size() * 3);
  return RgbImage(image.width, image.height, std::move(pixels));
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegError*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr, int) {}

// Decodes into `pixels`; returns false with err->message set on failure.
// Kept free of objects with destructors between setjmp and longjmp.
bool decode_jpeg(std::FILE* file, JpegError* err, std::vector<Rgb>& pixels, std::size_t& width,
                 std::size_t& height) {
  jpeg_decompress_struct info;
  info.err = jpeg_std_error(&err->mgr);
  err->mgr.error_exit = jpeg_error_exit;
  err->mgr.emit_message = jpeg_silence;
  if (setjmp(err->jump)) {
    jpeg_destroy_decompress(&info);
    return false;
  }
  jpeg_create_decompress(&info);
  jpeg_stdio_src(&info, file);
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  width = info.output_width;
  height = info.output_height;
  pixels.resize(width * height);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = reinterpret_cast<JSAMPROW>(pixels.data() + std::size_t{info.output_scanline} * width);
    jpeg_read_scanlines(&info, &row, 1);
  }
  // Truncated data is reported as a warning by libjpeg; treat it as corrupt.
  const bool truncated = err->mgr.num_warnings > 0;
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  if (truncated) {
    std::snprintf(err->message, sizeof(err->message), "truncated or damaged data");
    return false;
  }
  return true;
}

RgbImage read_jpeg(const std::filesystem::path& path) {
  const FilePtr file = open_file(path, "rb");
  JpegError err{};
  std::vector<Rgb> pixels;
  std::size_t width = 0, height = 0;
  if (!decode_jpeg(file.get(), &err, pixels, width, height)) {
    throw InvalidInput("corrupt JPEG '" + path.string() + "': " + err.message);
  }
  return RgbImage(width, height, std::move(pixels));
}

bool encode_jpeg(std::FILE* file, JpegError* err, const RgbImage& img, int quality) {
  jpeg_compress_struct info;
  info.err = jpeg_std_error(&err->mgr);
  err->mgr.error_exit = jpeg_error_exit;
  if (setjmp(err->jump)) {
    jpeg_destroy_compress(&info);
    return false;
  }
  jpeg_create_compress(&info);
  jpeg_stdio_dest(&info, file);
  info.image_width = static_cast<JDIMENSION>(img.width());
  info.image_height = static_cast<JDIMENSION>(img.height());
  info.input_components = 3;
  info.in_color_space = JCS_RGB;
  jpeg_set_defaults(&info);
  jpeg_set_quality(&info, quality, TRUE);
  jpeg_start_compress(&info, TRUE);
  while (info.next_scanline < info.image_height) {
    auto* row = const_cast<JSAMPROW>(
        reinterpret_cast<const JSAMPLE*>(img.pixels().data() + std::size_t{info.next_scanline} * img.width()));
    jpeg_write_scanlines(&info, &row, 1);
  }
  jpeg_finish_compress(&info);
  jpeg_destroy_compress(&info);
  return true;
}

}  // namespace

bool has_image_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::optional<ImageInfo> probe_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  const int first = in.peek();
  if (first == 0x89) return probe_png(in);
  if (first == 0xFF) return probe_jpeg(in);
  return std::nullopt;
}

RgbImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidInput("cannot open '" + path.string() + "'");
  }
  const int first = in.peek();
  in.close();
  if (first == 0x89) return read_png(path);
  if (first == 0xFF) return read_jpeg(path);
  throw InvalidInput("'" + path.string() + "' is neither PNG nor JPEG");
}

namespace {

// No C++ objects with destructors live in this frame across the setjmp.
bool encode_png(std::FILE* file, const RgbImage& img, bool fast, const char** error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    *error = "out of memory";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    *error = "libpng error";
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // One cheap filter and zlib level 1: about 2x smaller than unfiltered
  // output, at a fraction of the default encoder's time.
  if (fast) {
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_UP);
    png_set_compression_level(png, 1);
  }
  png_write_info(png, info);
  const auto* base = reinterpret_cast<const png_byte*>(img.pixels().data());
  const std::size_t stride = img.width() * 3;
  for (std::size_t r = 0; r < img.height(); ++r) png_write_row(png, base + r * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& img, bool fast) {
  static_assert(sizeof(Rgb) == 3);
  const char* error = nullptr;
  {
    const FilePtr file = open_file(path, "wb");
    if (encode_png(file.get(), img, fast, &error) && std::fflush(file.get()) == 0) return;
  }
  throw InvalidInput("cannot write PNG '" + path.string() + "': " + (error ? error : "I/O error"));
}

void write_jpeg(const std::filesystem::path& path, const RgbImage& img, int quality) {
  const FilePtr file = open_file(path, "wb");
  JpegError err{};
  if (!encode_jpeg(file.get(), &err, img, quality)) {
    throw InvalidInput("cannot write JPEG '" + path.string() + "': " + err.message);
  }
}

}  // namespace dedup
