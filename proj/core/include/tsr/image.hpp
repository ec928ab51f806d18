#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tsr/geometry.hpp"

namespace tsr {

/// 8-bit interleaved image, row-major, 1 or 3 channels.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, std::uint8_t fill = 0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  ImageSize size() const noexcept { return {height_, width_}; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t& at(int y, int x, int c = 0) { return pixels_[index(y, x, c)]; }
  std::uint8_t at(int y, int x, int c = 0) const { return pixels_[index(y, x, c)]; }

  std::span<std::uint8_t> data() noexcept { return pixels_; }
  std::span<const std::uint8_t> data() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using Rgb = std::array<std::uint8_t, 3>;

/// Reads any PNG as 8-bit RGB. Throws InvalidInput if unreadable.
Image read_png(const std::filesystem::path& path);
/// Writes 1-channel images as grayscale and 3-channel images as RGB.
void write_png(const Image& image, const std::filesystem::path& path);

Image gray_to_rgb(const Image& gray);
Image resize_bilinear(const Image& src, int height, int width);
/// Extends the image to (height, width) by replicating the last row/column.
Image pad_replicate(const Image& src, int height, int width);

void fill_rect(Image& img, const Rect& r, std::uint8_t value);
/// Thick line by stamping squares along the segment; clips to the image.
void draw_line(Image& img, Point a, Point b, const Rgb& color, int thickness = 1);
void draw_polygon(Image& img, std::span<const Point> polygon, const Rgb& color, int thickness = 1);

}  // namespace tsr
