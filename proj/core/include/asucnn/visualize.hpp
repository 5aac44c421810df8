#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "asucnn/model.hpp"

namespace asucnn {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

// Binary PGM: "P5\n<w> <h>\n255\n" followed by w*h bytes.
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);
GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

inline constexpr std::uint8_t kMosaicSeparator = 255;
inline constexpr std::uint8_t kConstantChannelGray = 128;

struct ChannelRange {
  float min = 0.0f;
  float max = 0.0f;
};

// Every channel of one feature map, min-max stretched to 0..255 on its own,
// tiled row-major into a near-square grid with 1-pixel separators.
struct FeatureMapMosaic {
  std::string layer;
  std::size_t tile_height = 0;
  std::size_t tile_width = 0;
  std::size_t tiles = 0;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::vector<ChannelRange> ranges;
  GrayImage image;

  // Top-left pixel of tile `t` inside the mosaic image.
  std::size_t tile_row(std::size_t t) const { return (t / grid_cols) * (tile_height + 1); }
  std::size_t tile_col(std::size_t t) const { return (t % grid_cols) * (tile_width + 1); }
};

FeatureMapMosaic build_mosaic(const std::string& layer, const Tensor& feature_map);

struct MosaicFile {
  FeatureMapMosaic mosaic;
  std::filesystem::path file;
};

// Selector is "all" or a comma-separated list of conv layer names (conv1, ...).
// Writes <out_dir>/<layer>.pgm per layer from the post-activation maps.
std::vector<MosaicFile> export_feature_maps(const ModelParams<float>& params, const Tensor& image,
                                            const std::string& selector,
                                            const std::filesystem::path& out_dir);

std::vector<std::string> resolve_layer_selector(const Architecture& arch, const std::string& selector);

}  // namespace asucnn
