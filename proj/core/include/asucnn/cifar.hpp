#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asucnn/tensor.hpp"

namespace asucnn::cifar {

// Binary distribution layout: each record is [label][R 1024][G 1024][B 1024],
// each plane 32 rows top-to-bottom.
inline constexpr std::size_t kSide = 32;
inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kPlaneBytes = kSide * kSide;
inline constexpr std::size_t kImageBytes = kPlaneBytes * kChannels;
inline constexpr std::size_t kRecordBytes = kImageBytes + 1;
inline constexpr std::size_t kRecordsPerFile = 10000;
inline constexpr std::size_t kNumClasses = 10;

enum class Split { kTrain, kTest };

// Images are stored contiguously, channel-last [32,32,3], values in [0,1].
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Split split) : split_(split) {}

  Split split() const noexcept { return split_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::span<const float> pixels(std::size_t i) const {
    return {pixels_.data() + i * kImageBytes, kImageBytes};
  }
  Tensor image(std::size_t i) const;
  std::uint8_t label(std::size_t i) const { return labels_.at(i); }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  void add(std::span<const float> hwc_pixels, std::uint8_t label);
  void reserve(std::size_t n);

  // Copy of the selected examples, in the given order.
  Dataset select(std::span<const std::size_t> indices) const;

 private:
  Split split_ = Split::kTrain;
  std::vector<float> pixels_;
  std::vector<std::uint8_t> labels_;
};

// Decodes one 3073-byte record into channel-last floats (byte / 255).
// Throws FormatError if the label exceeds 9.
std::uint8_t decode_record(std::span<const std::uint8_t> record, std::span<float> hwc_out);

// Inverse of decode_record for byte-valued images given channel-last.
std::vector<std::uint8_t> encode_record(std::uint8_t label, std::span<const std::uint8_t> hwc_bytes);

// 3072 planar bytes (R, G, B planes, rows top-to-bottom) -> [32,32,3] in [0,1].
Tensor decode_raw_image(std::span<const std::uint8_t> planar);
Tensor load_raw_image(const std::filesystem::path& path);

// Reads one batch file. The file must hold exactly `records` records.
Dataset load_batch_file(const std::filesystem::path& path, Split split = Split::kTrain,
                        std::size_t records = kRecordsPerFile);

void write_batch_file(const std::filesystem::path& path, std::span<const std::uint8_t> records);

struct SplitLimits {
  std::optional<std::size_t> train;
  std::optional<std::size_t> test;
};

struct Splits {
  Dataset train{Split::kTrain};
  Dataset test{Split::kTest};
};

inline const std::vector<std::string>& train_file_names() {
  static const std::vector<std::string> kNames = {"data_batch_1.bin", "data_batch_2.bin",
                                                  "data_batch_3.bin", "data_batch_4.bin",
                                                  "data_batch_5.bin"};
  return kNames;
}
inline constexpr const char* kTestFileName = "test_batch.bin";

// Loads data_batch_1..5.bin and test_batch.bin from root. A limit keeps the
// first N examples of that split after a seeded shuffle; limits larger than
// the split are clamped with a warning on stderr.
Splits load_dataset(const std::filesystem::path& root, const SplitLimits& limits = {},
                    std::uint64_t seed = 0, std::size_t records_per_file = kRecordsPerFile);

// True when every batch file is present under root.
bool dataset_present(const std::filesystem::path& root);

// Seeded permutation of [0, n) chopped into consecutive batches; the final
// batch may be short.
struct BatchPlan {
  std::uint64_t seed = 0;
  std::size_t batch_size = 1;
  std::vector<std::size_t> permutation;

  std::size_t batch_count() const;
  std::span<const std::size_t> batch(std::size_t b) const;
};

BatchPlan make_batch_plan(std::size_t n, std::size_t batch_size, std::uint64_t seed);

std::vector<std::vector<std::size_t>> minibatches(const Dataset& dataset, std::size_t batch_size,
                                                  std::uint64_t epoch_seed);

}  // namespace asucnn::cifar
