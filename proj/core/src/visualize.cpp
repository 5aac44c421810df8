#include "asucnn/visualize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace asucnn {

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw ShapeError("PGM pixel buffer does not match width*height");
  }
  const std::string header =
      "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
  // Header tokens are whitespace separated; exactly one whitespace byte
  // follows maxval before the raster.
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) throw IoError("PGM header truncated");
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos));
  };
  if (token() != "P5") throw IoError("not a binary PGM (P5)");
  GrayImage image;
  image.width = std::stoul(token());
  image.height = std::stoul(token());
  if (token() != "255") throw IoError("only maxval 255 PGMs are supported");
  ++pos;
  if (bytes.size() < pos || bytes.size() - pos != image.width * image.height) {
    throw IoError("PGM raster size does not match header");
  }
  image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return image;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  const auto bytes = encode_pgm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return decode_pgm({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

FeatureMapMosaic build_mosaic(const std::string& layer, const Tensor& feature_map) {
  if (feature_map.shape().rank() != 3) {
    throw ShapeError("feature map must be [h, w, c], got " + feature_map.shape().to_string());
  }
  FeatureMapMosaic m;
  m.layer = layer;
  m.tile_height = feature_map.shape()[0];
  m.tile_width = feature_map.shape()[1];
  m.tiles = feature_map.shape()[2];
  m.grid_cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m.tiles))));
  m.grid_rows = (m.tiles + m.grid_cols - 1) / m.grid_cols;

  m.image.width = m.grid_cols * m.tile_width + (m.grid_cols - 1);
  m.image.height = m.grid_rows * m.tile_height + (m.grid_rows - 1);
  m.image.pixels.assign(m.image.width * m.image.height, kMosaicSeparator);

  const std::size_t c = m.tiles;
  for (std::size_t k = 0; k < c; ++k) {
    ChannelRange r{feature_map(0, 0, k), feature_map(0, 0, k)};
    for (std::size_t i = 0; i < m.tile_height; ++i)
      for (std::size_t j = 0; j < m.tile_width; ++j) {
        r.min = std::min(r.min, feature_map(i, j, k));
        r.max = std::max(r.max, feature_map(i, j, k));
      }
    m.ranges.push_back(r);

    const double span = static_cast<double>(r.max) - static_cast<double>(r.min);
    const std::size_t top = m.tile_row(k), left = m.tile_col(k);
    for (std::size_t i = 0; i < m.tile_height; ++i) {
      for (std::size_t j = 0; j < m.tile_width; ++j) {
        std::uint8_t v = kConstantChannelGray;
        if (span > 0.0) {
          const double t = (static_cast<double>(feature_map(i, j, k)) - r.min) / span;
          v = static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
        }
        m.image.pixels[(top + i) * m.image.width + left + j] = v;
      }
    }
  }
  return m;
}

std::vector<std::string> resolve_layer_selector(const Architecture& arch, const std::string& selector) {
  std::vector<std::string> valid;
  for (std::size_t i = 0; i < arch.conv_stages.size(); ++i) valid.push_back("conv" + std::to_string(i + 1));
  if (selector == "all") return valid;

  std::vector<std::string> chosen;
  std::stringstream ss(selector);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (std::find(valid.begin(), valid.end(), name) == valid.end()) {
      std::string list;
      for (const auto& v : valid) list += (list.empty() ? "" : ", ") + v;
      throw UsageError("unknown layer '" + name + "'; valid layers: " + list + ", all");
    }
    chosen.push_back(name);
  }
  if (chosen.empty()) throw UsageError("empty layer selector");
  return chosen;
}

std::vector<MosaicFile> export_feature_maps(const ModelParams<float>& params, const Tensor& image,
                                            const std::string& selector,
                                            const std::filesystem::path& out_dir) {
  const auto layers = resolve_layer_selector(params.arch, selector);
  const auto trace = forward_full(params, image);
  std::filesystem::create_directories(out_dir);

  std::vector<MosaicFile> files;
  for (const auto& layer : layers) {
    const std::size_t stage = std::stoul(layer.substr(4)) - 1;
    MosaicFile f{build_mosaic(layer, trace.stages[stage].activation), out_dir / (layer + ".pgm")};
    write_pgm(f.file, f.mosaic.image);
    files.push_back(std::move(f));
  }
  return files;
}

}  // namespace asucnn
