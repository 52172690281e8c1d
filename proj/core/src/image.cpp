#include "vroc/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace vroc {

namespace fs = std::filesystem;

Image Image::filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Image img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = r;
    img.rgb[i + 1] = g;
    img.rgb[i + 2] = b;
  }
  return img;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::string& path, const Image& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw IoError("write_png: malformed image for " + path);
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("write_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("write_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("write_png: png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write_png: libpng failure writing " + path);
  }
  png_init_io(png, fp.get());
  // Frames are small and numerous: favor encode speed over size.
  png_set_compression_level(png, 1);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("read_png: cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("read_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("read_png: png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("read_png: libpng failure reading " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize any color type to 8-bit RGB.
  png_set_strip_16(png);
  png_set_packing(png);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Image img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<std::size_t>(y)] = img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<double> to_gray(const Image& img) {
  std::vector<double> g(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t o = i * 3;
    g[i] = (static_cast<int>(img.rgb[o]) + img.rgb[o + 1] + img.rgb[o + 2]) / (3.0 * 255.0);
  }
  return g;
}

Image downsample_box2(const Image& img) {
  if (img.width % 2 != 0 || img.height % 2 != 0)
    throw ShapeMismatchError("downsample_box2: odd dimensions " + std::to_string(img.width) +
                             "x" + std::to_string(img.height));
  Image out;
  out.width = img.width / 2;
  out.height = img.height / 2;
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const int s = img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                      img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c);
        out.at(x, y, c) = static_cast<std::uint8_t>((s + 2) / 4);
      }
  return out;
}

namespace {

class PngDirSource final : public FrameSource {
 public:
  PngDirSource(const std::string& dir, double fps) : fps_(fps) {
    if (!fs::is_directory(dir)) throw IoError("frame directory not found: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".png") paths_.push_back(e.path().string());
    }
    std::sort(paths_.begin(), paths_.end());
    if (paths_.empty()) throw IoError("no .png frames in " + dir);
  }
  int count() const override { return static_cast<int>(paths_.size()); }
  Image frame(int index) const override {
    if (index < 0 || index >= count())
      throw IndexOutOfRangeError("frame index " + std::to_string(index) + " of " +
                                 std::to_string(count()));
    return read_png(paths_[static_cast<std::size_t>(index)]);
  }
  double fps() const override { return fps_; }

 private:
  std::vector<std::string> paths_;
  double fps_;
};

class RawStreamSource final : public FrameSource {
 public:
  explicit RawStreamSource(const std::string& path) : path_(path) {
    std::ifstream side(path + ".json");
    if (!side) throw IoError("missing sidecar " + path + ".json");
    nlohmann::json j = nlohmann::json::parse(side);
    width_ = j.at("width").get<int>();
    height_ = j.at("height").get<int>();
    fps_ = j.at("fps").get<double>();
    if (width_ <= 0 || height_ <= 0 || fps_ <= 0)
      throw IoError("invalid sidecar values in " + path + ".json");
    const auto bytes = fs::file_size(path);
    const std::size_t frame_bytes = static_cast<std::size_t>(width_) * height_ * 3;
    if (bytes % frame_bytes != 0)
      throw IoError("raw stream size not a multiple of frame size: " + path);
    count_ = static_cast<int>(bytes / frame_bytes);
  }
  int count() const override { return count_; }
  Image frame(int index) const override {
    if (index < 0 || index >= count_)
      throw IndexOutOfRangeError("frame index " + std::to_string(index) + " of " +
                                 std::to_string(count_));
    Image img;
    img.width = width_;
    img.height = height_;
    img.rgb.resize(static_cast<std::size_t>(width_) * height_ * 3);
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw IoError("cannot open raw stream " + path_);
    in.seekg(static_cast<std::streamoff>(img.rgb.size()) * index);
    in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.rgb.size()))
      throw IoError("short read from raw stream " + path_);
    return img;
  }
  double fps() const override { return fps_; }

 private:
  std::string path_;
  int width_ = 0, height_ = 0, count_ = 0;
  double fps_ = 0;
};

}  // namespace

std::unique_ptr<FrameSource> open_png_dir(const std::string& dir, double fps) {
  return std::make_unique<PngDirSource>(dir, fps);
}

std::unique_ptr<FrameSource> open_raw_stream(const std::string& path) {
  return std::make_unique<RawStreamSource>(path);
}

struct RawStreamWriter::Impl {
  std::ofstream out;
  std::string path;
  int width, height;
  double fps;
};

RawStreamWriter::RawStreamWriter(const std::string& path, int width, int height, double fps)
    : impl_(std::make_unique<Impl>()) {
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw IoError("cannot open raw stream for writing: " + path);
  impl_->path = path;
  impl_->width = width;
  impl_->height = height;
  impl_->fps = fps;
  nlohmann::json j{{"width", width}, {"height", height}, {"fps", fps}};
  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw IoError("cannot write sidecar " + path + ".json");
  side << j.dump() << "\n";
}

RawStreamWriter::~RawStreamWriter() = default;

void RawStreamWriter::append(const Image& img) {
  if (img.width != impl_->width || img.height != impl_->height)
    throw ShapeMismatchError("raw stream frame dims mismatch");
  impl_->out.write(reinterpret_cast<const char*>(img.rgb.data()),
                   static_cast<std::streamsize>(img.rgb.size()));
  if (!impl_->out) throw IoError("write failure on raw stream " + impl_->path);
}

void RawStreamWriter::close() {
  if (impl_->out.is_open()) {
    impl_->out.close();
    if (!impl_->out) throw IoError("close failure on raw stream " + impl_->path);
  }
}

}  // namespace vroc
