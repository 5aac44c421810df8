#include "asucnn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace asucnn {

namespace {

using json = nlohmann::json;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::kTruncated,
                            "checkpoint truncated at byte " + std::to_string(pos_));
    }
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string string() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

CheckpointError corrupt(const std::string& what) {
  return CheckpointError(CheckpointError::Kind::kCorrupt, "corrupt checkpoint: " + what);
}

json arch_to_json(const Architecture& arch) {
  json stages = json::array();
  for (const auto& s : arch.conv_stages) {
    stages.push_back({{"filters", s.filters},
                      {"filter_size", s.filter_size},
                      {"padding", s.padding},
                      {"stride", s.stride},
                      {"pool_after", s.pool_after}});
  }
  return {{"input_size", arch.input_size},
          {"input_channels", arch.input_channels},
          {"conv_stages", stages},
          {"hidden_width", arch.hidden_width},
          {"num_classes", arch.num_classes},
          {"activation", std::string(to_string(arch.activation))}};
}

Architecture arch_from_json(const json& j) {
  Architecture arch;
  arch.input_size = j.at("input_size").get<std::size_t>();
  arch.input_channels = j.at("input_channels").get<std::size_t>();
  for (const auto& s : j.at("conv_stages")) {
    arch.conv_stages.push_back({s.at("filters").get<std::size_t>(),
                                s.at("filter_size").get<std::size_t>(),
                                s.at("padding").get<std::size_t>(),
                                s.at("stride").get<std::size_t>(),
                                s.at("pool_after").get<bool>()});
  }
  arch.hidden_width = j.at("hidden_width").get<std::size_t>();
  arch.num_classes = j.at("num_classes").get<std::size_t>();
  const auto kind = parse_activation(j.at("activation").get<std::string>());
  if (!kind) throw corrupt("unknown activation in config echo");
  arch.activation = *kind;
  return arch;
}

json optional_to_json(const std::optional<std::size_t>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<std::size_t> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const RawCheckpoint& raw) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, raw.version);
  put_u32(out, static_cast<std::uint32_t>(raw.activation));
  put_bytes(out, raw.config_json);
  put_u32(out, static_cast<std::uint32_t>(raw.tensors.size()));
  for (const auto& t : raw.tensors) {
    put_bytes(out, t.name);
    const auto dims = t.value.shape().dims();
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (std::size_t d : dims) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

RawCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  const std::size_t head = std::min(bytes.size(), sizeof kCheckpointMagic);
  if (std::memcmp(bytes.data(), kCheckpointMagic, head) != 0 || bytes.empty()) {
    throw CheckpointError(CheckpointError::Kind::kBadMagic, "not an asucnn checkpoint (bad magic)");
  }
  in.take(sizeof kCheckpointMagic);

  RawCheckpoint raw;
  raw.version = in.u32();
  if (raw.version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::kVersionMismatch,
                          "checkpoint version " + std::to_string(raw.version) +
                              " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t kind = in.u32();
  if (kind > static_cast<std::uint32_t>(ActivationKind::kRelu)) throw corrupt("activation tag");
  raw.activation = static_cast<ActivationKind>(kind);
  raw.config_json = in.string();

  const std::uint32_t count = in.u32();
  for (std::uint32_t t = 0; t < count; ++t) {
    std::string name = in.string();
    const std::uint32_t rank = in.u32();
    if (rank < 1 || rank > Shape::kMaxRank) throw corrupt("tensor " + name + " has rank " + std::to_string(rank));
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = in.u32();
    Shape shape = [&] {
      try {
        return Shape(std::span<const std::size_t>(dims));
      } catch (const std::exception&) {
        throw corrupt("tensor " + name + " has invalid dims");
      }
    }();
    in.need(shape.elements() * 4);
    std::vector<float> values(shape.elements());
    for (auto& v : values) v = std::bit_cast<float>(in.u32());
    raw.tensors.push_back({std::move(name), Tensor(shape, std::move(values))});
  }
  if (!in.at_end()) throw corrupt("trailing bytes after last tensor");
  return raw;
}

void write_checkpoint_file(const std::filesystem::path& path, const RawCheckpoint& raw) {
  const auto bytes = encode_checkpoint(raw);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "short write to " + path.string());
}

RawCheckpoint read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

std::string config_to_json(const Architecture& arch, const TrainConfig& config) {
  const json train = {{"epochs", config.epochs},
                      {"batch_size", config.batch_size},
                      {"seed", config.seed},
                      {"activation", std::string(to_string(config.activation))},
                      {"lr0", config.lr0},
                      {"decay", config.decay},
                      {"hidden_width", config.hidden_width},
                      {"data_root", config.data_root.string()},
                      {"subset", optional_to_json(config.subset)},
                      {"test_subset", optional_to_json(config.test_subset)}};
  return json{{"architecture", arch_to_json(arch)}, {"train", train}}.dump();
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const TrainConfig& config) {
  RawCheckpoint raw;
  raw.activation = params.arch.activation;
  raw.config_json = config_to_json(params.arch, config);
  raw.tensors = params.tensors;
  write_checkpoint_file(path, raw);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  RawCheckpoint raw = read_checkpoint_file(path);
  Checkpoint ck;
  try {
    const json j = json::parse(raw.config_json);
    const Architecture arch = arch_from_json(j.at("architecture"));
    const json& t = j.at("train");
    ck.config.epochs = t.at("epochs").get<std::size_t>();
    ck.config.batch_size = t.at("batch_size").get<std::size_t>();
    ck.config.seed = t.at("seed").get<std::uint64_t>();
    const auto kind = parse_activation(t.at("activation").get<std::string>());
    if (!kind) throw corrupt("unknown activation in train config");
    ck.config.activation = *kind;
    ck.config.lr0 = t.at("lr0").get<double>();
    ck.config.decay = t.at("decay").get<double>();
    ck.config.hidden_width = t.at("hidden_width").get<std::size_t>();
    ck.config.data_root = t.at("data_root").get<std::string>();
    ck.config.subset = optional_from_json(t.at("subset"));
    ck.config.test_subset = optional_from_json(t.at("test_subset"));
    ck.params = zero_model<float>(arch);
  } catch (const json::exception& e) {
    throw corrupt(std::string("config echo: ") + e.what());
  } catch (const ShapeError& e) {
    throw corrupt(std::string("config echo describes an invalid architecture: ") + e.what());
  }

  if (ck.params.arch.activation != raw.activation) throw corrupt("activation header disagrees with config");
  if (raw.tensors.size() != ck.params.tensors.size()) {
    throw corrupt("expected " + std::to_string(ck.params.tensors.size()) + " tensors, found " +
                  std::to_string(raw.tensors.size()));
  }
  for (std::size_t i = 0; i < raw.tensors.size(); ++i) {
    auto& want = ck.params.tensors[i];
    auto& got = raw.tensors[i];
    if (want.name != got.name || !(want.value.shape() == got.value.shape())) {
      throw corrupt("tensor " + std::to_string(i) + " is " + got.name + got.value.shape().to_string() +
                    ", expected " + want.name + want.value.shape().to_string());
    }
    want.value = std::move(got.value);
  }
  return ck;
}

}  // namespace asucnn
