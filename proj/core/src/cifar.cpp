#include "asucnn/cifar.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <utility>

#include "asucnn/errors.hpp"

namespace asucnn::cifar {

Tensor Dataset::image(std::size_t i) const {
  if (i >= size()) throw UsageError("dataset index " + std::to_string(i) + " out of range");
  const auto px = pixels(i);
  return Tensor(Shape{kSide, kSide, kChannels}, std::vector<float>(px.begin(), px.end()));
}

void Dataset::add(std::span<const float> hwc_pixels, std::uint8_t label) {
  if (hwc_pixels.size() != kImageBytes) throw ShapeError("dataset image must have 3072 values");
  pixels_.insert(pixels_.end(), hwc_pixels.begin(), hwc_pixels.end());
  labels_.push_back(label);
}

void Dataset::reserve(std::size_t n) {
  pixels_.reserve(n * kImageBytes);
  labels_.reserve(n);
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out(split_);
  out.reserve(indices.size());
  for (std::size_t i : indices) out.add(pixels(i), labels_.at(i));
  return out;
}

std::uint8_t decode_record(std::span<const std::uint8_t> record, std::span<float> hwc_out) {
  if (record.size() != kRecordBytes || hwc_out.size() != kImageBytes) {
    throw ShapeError("decode_record: expected 3073-byte record and 3072-float output");
  }
  const std::uint8_t label = record[0];
  if (label >= kNumClasses) {
    throw FormatError("corrupt record: label " + std::to_string(label) + " is not in 0..9");
  }
  const std::uint8_t* planes = record.data() + 1;
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t px = 0; px < kPlaneBytes; ++px) {
      hwc_out[px * kChannels + c] = static_cast<float>(planes[c * kPlaneBytes + px]) / 255.0f;
    }
  }
  return label;
}

std::vector<std::uint8_t> encode_record(std::uint8_t label, std::span<const std::uint8_t> hwc_bytes) {
  if (hwc_bytes.size() != kImageBytes) throw ShapeError("encode_record: image must be 3072 bytes");
  std::vector<std::uint8_t> record(kRecordBytes);
  record[0] = label;
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t px = 0; px < kPlaneBytes; ++px)
      record[1 + c * kPlaneBytes + px] = hwc_bytes[px * kChannels + c];
  return record;
}

Tensor decode_raw_image(std::span<const std::uint8_t> planar) {
  if (planar.size() != kImageBytes) {
    throw FormatError("raw image must be exactly 3072 bytes, got " + std::to_string(planar.size()));
  }
  std::vector<std::uint8_t> record(kRecordBytes, 0);
  std::copy(planar.begin(), planar.end(), record.begin() + 1);
  Tensor image(Shape{kSide, kSide, kChannels});
  decode_record(record, image.data());
  return image;
}

Tensor load_raw_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataMissingError("cannot open image " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_raw_image(bytes);
}

Dataset load_batch_file(const std::filesystem::path& path, Split split, std::size_t records) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataMissingError("missing CIFAR-10 file: " + path.string());

  const auto size = std::filesystem::file_size(path);
  if (size != records * kRecordBytes) {
    throw FormatError(path.string() + ": expected " + std::to_string(records * kRecordBytes) +
                      " bytes, found " + std::to_string(size));
  }
  std::vector<std::uint8_t> bytes(size);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw FormatError(path.string() + ": short read");
  }

  Dataset data(split);
  data.reserve(records);
  std::vector<float> image(kImageBytes);
  for (std::size_t r = 0; r < records; ++r) {
    const std::span<const std::uint8_t> record(bytes.data() + r * kRecordBytes, kRecordBytes);
    std::uint8_t label;
    try {
      label = decode_record(record, image);
    } catch (const FormatError& e) {
      throw FormatError(path.string() + " record " + std::to_string(r) + ": " + e.what());
    }
    data.add(image, label);
  }
  return data;
}

void write_batch_file(const std::filesystem::path& path, std::span<const std::uint8_t> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(records.data()),
            static_cast<std::streamsize>(records.size()));
  if (!out) throw IoError("short write to " + path.string());
}

bool dataset_present(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  for (const auto& name : train_file_names()) {
    if (!fs::exists(root / name)) return false;
  }
  return fs::exists(root / kTestFileName);
}

namespace {

Dataset take_subset(Dataset full, std::optional<std::size_t> limit, std::uint64_t seed,
                    const char* split_name) {
  if (!limit) return full;
  std::size_t n = *limit;
  if (n > full.size()) {
    std::cerr << "warning: " << split_name << " subset " << n << " exceeds split size "
              << full.size() << "; using " << full.size() << "\n";
    n = full.size();
  }
  std::vector<std::size_t> order(full.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(n);
  return full.select(order);
}

}  // namespace

Splits load_dataset(const std::filesystem::path& root, const SplitLimits& limits,
                    std::uint64_t seed, std::size_t records_per_file) {
  Splits splits;
  Dataset train(Split::kTrain);
  train.reserve(records_per_file * train_file_names().size());
  for (const auto& name : train_file_names()) {
    if (!std::filesystem::exists(root / name)) {
      throw DataMissingError("missing CIFAR-10 file: " + (root / name).string());
    }
  }
  if (!std::filesystem::exists(root / kTestFileName)) {
    throw DataMissingError("missing CIFAR-10 file: " + (root / kTestFileName).string());
  }
  for (const auto& name : train_file_names()) {
    const Dataset part = load_batch_file(root / name, Split::kTrain, records_per_file);
    for (std::size_t i = 0; i < part.size(); ++i) train.add(part.pixels(i), part.label(i));
  }
  Dataset test = load_batch_file(root / kTestFileName, Split::kTest, records_per_file);

  splits.train = take_subset(std::move(train), limits.train, seed, "train");
  splits.test = take_subset(std::move(test), limits.test, seed ^ 0x9e3779b97f4a7c15ULL, "test");
  return splits;
}

std::size_t BatchPlan::batch_count() const {
  return (permutation.size() + batch_size - 1) / batch_size;
}

std::span<const std::size_t> BatchPlan::batch(std::size_t b) const {
  const std::size_t begin = b * batch_size;
  const std::size_t end = std::min(begin + batch_size, permutation.size());
  return {permutation.data() + begin, end - begin};
}

BatchPlan make_batch_plan(std::size_t n, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  BatchPlan plan{seed, batch_size, std::vector<std::size_t>(n)};
  std::iota(plan.permutation.begin(), plan.permutation.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(plan.permutation.begin(), plan.permutation.end(), rng);
  return plan;
}

std::vector<std::vector<std::size_t>> minibatches(const Dataset& dataset, std::size_t batch_size,
                                                  std::uint64_t epoch_seed) {
  const BatchPlan plan = make_batch_plan(dataset.size(), batch_size, epoch_seed);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(plan.batch_count());
  for (std::size_t b = 0; b < plan.batch_count(); ++b) {
    const auto batch = plan.batch(b);
    out.emplace_back(batch.begin(), batch.end());
  }
  return out;
}

}  // namespace asucnn::cifar
