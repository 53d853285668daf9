// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "vision/image.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "common/errors.hpp"

namespace dg {

ImagePlane ImagePlane::filled(std::size_t height, std::size_t width, double value,
                              std::size_t channels) {
  return {height, width, channels, std::vector<double>(height * width * channels, value)};
}

void ImagePlane::validate() const {
  if (height == 0 || width == 0 || channels == 0) throw DataError("image: zero extent");
  if (values.size() != height * width * channels) throw DataError("image: buffer size mismatch");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("image: pixel value outside [0,1]");
  }
}

ImagePlane crop_resize(const ImagePlane& image, const Box& box, std::size_t out_size) {
  if (out_size == 0) throw UsageError("crop_resize: out_size must be positive");
  const double w = static_cast<double>(image.width), h = static_cast<double>(image.height);
  const double x0 = std::clamp(box.xmin, 0.0, w), x1 = std::clamp(box.xmax, 0.0, w);
  const double y0 = std::clamp(box.ymin, 0.0, h), y1 = std::clamp(box.ymax, 0.0, h);
  if (!(x1 > x0) || !(y1 > y0)) throw DataError("crop_resize: box lies outside the image");

  ImagePlane out = ImagePlane::filled(out_size, out_size, 0.0, image.channels);
  const double sx = (x1 - x0) / static_cast<double>(out_size);
  const double sy = (y1 - y0) / static_cast<double>(out_size);
  for (std::size_t oy = 0; oy < out_size; ++oy) {
    const double fy = std::clamp(y0 + (static_cast<double>(oy) + 0.5) * sy - 0.5, 0.0, h - 1.0);
    const auto iy0 = static_cast<std::size_t>(std::floor(fy));
    const std::size_t iy1 = std::min(iy0 + 1, image.height - 1);
    const double ty = fy - static_cast<double>(iy0);
    for (std::size_t ox = 0; ox < out_size; ++ox) {
      const double fx = std::clamp(x0 + (static_cast<double>(ox) + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const auto ix0 = static_cast<std::size_t>(std::floor(fx));
      const std::size_t ix1 = std::min(ix0 + 1, image.width - 1);
      const double tx = fx - static_cast<double>(ix0);
      for (std::size_t c = 0; c < image.channels; ++c) {
        const double top = image.at(c, iy0, ix0) * (1.0 - tx) + image.at(c, iy0, ix1) * tx;
        const double bot = image.at(c, iy1, ix0) * (1.0 - tx) + image.at(c, iy1, ix1) * tx;
        out.at(c, oy, ox) = top * (1.0 - ty) + bot * ty;
      }
    }
  }
  return out;
}

ImagePlane flip_horizontal(const ImagePlane& image) {
  ImagePlane out = image;
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < image.height; ++y)
      for (std::size_t x = 0; x < image.width; ++x)
        out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
  return out;
}

Box flip_box(const Box& box, double image_width) {
  return {image_width - box.xmax, box.ymin, image_width - box.xmin, box.ymax};
}

namespace {

constexpr char kRawMagic[8] = {'D', 'G', 'I', 'M', 'G', '0', '0', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(is.get())) << (8 * i);
  return v;
}

}  // namespace

void write_raw_image(const std::filesystem::path& path, const ImagePlane& image, bool as_u8) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write image: " + path.string());
  os.write(kRawMagic, sizeof(kRawMagic));
  put_u32(os, static_cast<std::uint32_t>(image.height));
  put_u32(os, static_cast<std::uint32_t>(image.width));
  put_u32(os, static_cast<std::uint32_t>(image.channels));
  os.put(as_u8 ? 0 : 1);
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < image.channels; ++c) {
        const double v = image.at(c, y, x);
        if (as_u8) {
          os.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
        } else {
          put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
      }
  if (!os) throw IoError("image write failed: " + path.string());
}

ImagePlane read_raw_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("missing image: " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kRawMagic, 8) != 0) {
    throw DataError("not a raw image file: " + path.string());
  }
  ImagePlane img;
  img.height = get_u32(is);
  img.width = get_u32(is);
  img.channels = get_u32(is);
  const int dtype = is.get();
  if (!is || (dtype != 0 && dtype != 1) || img.height == 0 || img.width == 0 || img.channels == 0) {
    throw DataError("corrupt raw image header: " + path.string());
  }
  img.values.assign(img.height * img.width * img.channels, 0.0);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < img.channels; ++c) {
        if (dtype == 0) {
          img.at(c, y, x) = static_cast<unsigned char>(is.get()) / 255.0;
        } else {
          img.at(c, y, x) = std::bit_cast<float>(get_u32(is));
        }
      }
  if (!is) throw DataError("truncated raw image: " + path.string());
  img.validate();
  return img;
}

ImagePlane load_image(const std::filesystem::path& path) {
  if (path.extension() != ".png") return read_raw_image(path);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw DataError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  ImagePlane img = ImagePlane::filled(png.height, png.width, 0.0, 3);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = buf[(y * img.width + x) * 3 + c] / 255.0;
  return img;
}

void write_png(const std::filesystem::path& path, const ImagePlane& image) {
  if (image.channels != 3) throw UsageError("write_png: expects 3 channels");
  std::vector<std::uint8_t> buf(image.height * image.width * 3);
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        buf[(y * image.width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(std::clamp(image.at(c, y, x), 0.0, 1.0) * 255.0));
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

}  // namespace dg
