#include "rendersynth/io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rendersynth {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::string& path, const Imaged& image) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write error: " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols()),
               static_cast<png_uint_32>(image.rows()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(static_cast<size_t>(image.cols()));
  for (Index i = 0; i < image.rows(); ++i) {
    for (Index j = 0; j < image.cols(); ++j) row[static_cast<size_t>(j)] = to_u8(image(i, j));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Imaged read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng read error: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray(png, 1, -1, -1);
  png_read_update_info(png, info);

  const Index rows = static_cast<Index>(png_get_image_height(png, info));
  const Index cols = static_cast<Index>(png_get_image_width(png, info));
  Imaged image(rows, cols);
  std::vector<std::uint8_t> row(static_cast<size_t>(cols));
  for (Index i = 0; i < rows; ++i) {
    png_read_row(png, row.data(), nullptr);
    for (Index j = 0; j < cols; ++j) image(i, j) = from_u8(row[static_cast<size_t>(j)]);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_f32(const std::string& path, const Imaged& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::uint32_t w = static_cast<std::uint32_t>(image.cols());
  const std::uint32_t h = static_cast<std::uint32_t>(image.rows());
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  for (Index i = 0; i < image.rows(); ++i)
    for (Index j = 0; j < image.cols(); ++j) {
      const float v = static_cast<float>(image(i, j));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Imaged read_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::uint32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || w == 0 || h == 0) throw std::runtime_error("bad f32 header: " + path);
  Imaged image(static_cast<Index>(h), static_cast<Index>(w));
  for (Index i = 0; i < image.rows(); ++i)
    for (Index j = 0; j < image.cols(); ++j) {
      float v = 0;
      in.read(reinterpret_cast<char*>(&v), 4);
      image(i, j) = v;
    }
  if (!in) throw std::runtime_error("truncated f32 file: " + path);
  return image;
}

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["path"] = r.path;
    j["bits"] = bits_to_string(r.label.bits);
    j["center_x"] = r.label.center_x;
    j["center_y"] = r.label.center_y;
    j["yaw"] = r.label.yaw;
    j["pitch"] = r.label.pitch;
    j["roll"] = r.label.roll;
    j["scale"] = r.label.scale;
    j["provenance"] = r.provenance;
    j["seed"] = r.seed;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    ManifestRecord r;
    r.path = j.at("path").get<std::string>();
    r.label.bits = bits_from_string(j.at("bits").get<std::string>());
    r.label.center_x = j.at("center_x").get<double>();
    r.label.center_y = j.at("center_y").get<double>();
    r.label.yaw = j.at("yaw").get<double>();
    r.label.pitch = j.at("pitch").get<double>();
    r.label.roll = j.at("roll").get<double>();
    r.label.scale = j.at("scale").get<double>();
    r.provenance = j.at("provenance").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace rendersynth
