#include "tsr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "tsr/error.hpp"

namespace tsr {

Image::Image(int height, int width, int channels, std::uint8_t fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
    throw InvalidInput("image dimensions must be positive with 1 or 3 channels");
  pixels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                     static_cast<std::size_t>(channels),
                 fill);
}

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw InvalidInput("cannot read PNG '" + path.string() + "': " + img.message);
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.height), static_cast<int>(img.width), 3);
  if (!png_image_finish_read(&img, nullptr, out.data().data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw InvalidInput("cannot decode PNG '" + path.string() + "': " + msg);
  }
  return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.data().data(), 0, nullptr))
    throw InvalidInput("cannot write PNG '" + path.string() + "': " + img.message);
}

Image gray_to_rgb(const Image& gray) {
  if (gray.channels() == 3) return gray;
  Image out(gray.height(), gray.width(), 3);
  for (int y = 0; y < gray.height(); ++y)
    for (int x = 0; x < gray.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = gray.at(y, x);
  return out;
}

Image resize_bilinear(const Image& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  Image out(height, width, src.channels());
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < src.channels(); ++c) {
        const double v = (1 - wy) * ((1 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c)) +
                         wy * ((1 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c));
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

Image pad_replicate(const Image& src, int height, int width) {
  if (height < src.height() || width < src.width()) throw InvalidInput("pad_replicate cannot shrink an image");
  Image out(height, width, src.channels());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < src.channels(); ++c)
        out.at(y, x, c) = src.at(std::min(y, src.height() - 1), std::min(x, src.width() - 1), c);
  return out;
}

void fill_rect(Image& img, const Rect& r, std::uint8_t value) {
  const int x0 = std::max(0, static_cast<int>(std::floor(r.x0)));
  const int y0 = std::max(0, static_cast<int>(std::floor(r.y0)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(r.x1)) - 1);
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(r.y1)) - 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      for (int c = 0; c < img.channels(); ++c) img.at(y, x, c) = value;
}

void draw_line(Image& img, Point a, Point b, const Rgb& color, int thickness) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
  const int lo = -(thickness - 1) / 2;
  const int hi = thickness / 2;
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const int cx = static_cast<int>(std::lround(a.x + t * (b.x - a.x)));
    const int cy = static_cast<int>(std::lround(a.y + t * (b.y - a.y)));
    for (int dy = lo; dy <= hi; ++dy)
      for (int dx = lo; dx <= hi; ++dx) {
        const int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) continue;
        if (img.channels() == 1) {
          img.at(y, x) = color[0];
        } else {
          for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[static_cast<std::size_t>(c)];
        }
      }
  }
}

void draw_polygon(Image& img, std::span<const Point> polygon, const Rgb& color, int thickness) {
  for (std::size_t i = 0; i < polygon.size(); ++i)
    draw_line(img, polygon[i], polygon[(i + 1) % polygon.size()], color, thickness);
}

}  // namespace tsr
