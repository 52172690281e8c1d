#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vroc/errors.hpp"

namespace vroc {

// Tightly packed row-major RGB24 frame.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  static Image filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  std::uint8_t& at(int x, int y, int c) {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

// PNG I/O (8-bit RGB). Writes use fast settings (low compression, no
// filtering) since frames are synthetic and numerous.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// Equal-weight grayscale in [0,1].
std::vector<double> to_gray(const Image& img);

// 2x2 box-mean downsample; both dimensions must be even. Integer
// rounding is half-up, so results are platform-independent.
Image downsample_box2(const Image& img);

// Random-access source of video frames.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual int count() const = 0;
  virtual Image frame(int index) const = 0;
  virtual double fps() const = 0;
};

// Directory of numbered .png frames (sorted by filename).
std::unique_ptr<FrameSource> open_png_dir(const std::string& dir, double fps);

// Single raw RGB24 stream with a JSON sidecar at <path>.json holding
// {"width": w, "height": h, "fps": f}.
std::unique_ptr<FrameSource> open_raw_stream(const std::string& path);

// Appends one frame to a raw RGB24 stream and (over)writes the sidecar.
class RawStreamWriter {
 public:
  RawStreamWriter(const std::string& path, int width, int height, double fps);
  ~RawStreamWriter();
  RawStreamWriter(const RawStreamWriter&) = delete;
  RawStreamWriter& operator=(const RawStreamWriter&) = delete;
  void append(const Image& img);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vroc
