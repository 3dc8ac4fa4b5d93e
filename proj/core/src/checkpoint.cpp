#include "s3d/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace s3d {
namespace {

constexpr char kMagic[4] = {'S', '3', 'D', 'V'};
constexpr std::size_t kConfigFields = 8;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T le(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }
  double f64(const char* what) {
    return std::bit_cast<double>(le<std::uint64_t>(what));
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw CheckpointError("checkpoint truncated while reading " +
                            std::string(what) + " at byte " +
                            std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

Tensor config_tensor(const ResTdmConfig& c) {
  return Tensor(Shape{kConfigFields},
                {static_cast<double>(c.num_scales),
                 static_cast<double>(c.features),
                 static_cast<double>(c.num_classes),
                 static_cast<double>(c.height), static_cast<double>(c.width),
                 static_cast<double>(c.levels),
                 static_cast<double>(static_cast<int>(c.mode)),
                 c.zero_disparity_channel ? 1.0 : 0.0});
}

std::size_t config_field(const Tensor& t, std::size_t i) {
  const double v = t[i];
  if (!(v >= 0.0) || v > 1e9 || v != std::floor(v)) {
    throw CheckpointError("checkpoint config field " + std::to_string(i) +
                          " is not a valid count");
  }
  return static_cast<std::size_t>(v);
}

ResTdmConfig config_from_tensor(const Tensor& t) {
  ResTdmConfig c;
  c.num_scales = config_field(t, 0);
  c.features = config_field(t, 1);
  c.num_classes = config_field(t, 2);
  c.height = config_field(t, 3);
  c.width = config_field(t, 4);
  c.levels = config_field(t, 5);
  const std::size_t mode = config_field(t, 6);
  if (mode > 2) throw CheckpointError("checkpoint has unknown input mode");
  c.mode = static_cast<InputMode>(mode);
  c.zero_disparity_channel = config_field(t, 7) != 0;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") +
                          e.what());
  }
  return c;
}

struct Entry {
  std::string name;
  Shape shape;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ResTdmModel& model) {
  const Tensor config = config_tensor(model.config);
  std::vector<std::string> names{"config"};
  std::vector<const Tensor*> tensors{&config};
  for (const auto& n : model.parameter_names()) names.push_back(n);
  for (const Tensor* p : model.parameters()) tensors.push_back(p);

  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.le<std::uint16_t>(kCheckpointVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(names[i].size()));
    w.bytes(names[i].data(), names[i].size());
    w.le<std::uint32_t>(static_cast<std::uint32_t>(tensors[i]->rank()));
    for (auto e : tensors[i]->shape()) w.le<std::uint64_t>(e);
  }
  for (const Tensor* t : tensors) {
    for (double v : t->data()) w.f64(v);
  }
  return w.take();
}

ResTdmModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != std::string(kMagic, 4)) {
    throw CheckpointError("bad checkpoint magic at byte 0 (expected S3DV)");
  }
  const auto version = r.le<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = r.le<std::uint32_t>("tensor count");
  if (count == 0 || count > 4096) {
    throw CheckpointError("implausible checkpoint tensor count " +
                          std::to_string(count));
  }
  std::vector<Entry> table;
  table.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint32_t>("name length");
    if (len > 256) {
      throw CheckpointError("checkpoint tensor name too long at byte " +
                            std::to_string(r.pos()));
    }
    Entry e;
    e.name = r.str(len, "tensor name");
    const auto rank = r.le<std::uint32_t>("rank");
    if (rank > 8) {
      throw CheckpointError("checkpoint tensor '" + e.name +
                            "' has implausible rank " + std::to_string(rank));
    }
    for (std::uint32_t a = 0; a < rank; ++a) {
      e.shape.push_back(static_cast<std::size_t>(r.le<std::uint64_t>("extent")));
    }
    table.push_back(std::move(e));
  }

  if (table[0].name != "config" || table[0].shape != Shape{kConfigFields}) {
    throw CheckpointError("checkpoint table does not start with config[8]");
  }
  Tensor config(Shape{kConfigFields});
  for (double& v : config.data()) v = r.f64("config payload");
  ResTdmModel model = build_model(config_from_tensor(config), 0).zeros_like();

  const auto names = model.parameter_names();
  const auto params = model.parameters();
  if (table.size() != params.size() + 1) {
    throw CheckpointError("checkpoint table lists " +
                          std::to_string(table.size() - 1) +
                          " parameters, architecture expects " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Entry& e = table[i + 1];
    if (e.name != names[i] || e.shape != params[i]->shape()) {
      throw CheckpointError("checkpoint entry " + std::to_string(i + 1) +
                            " is '" + e.name + "' " + to_string(e.shape) +
                            ", expected '" + names[i] + "' " +
                            to_string(params[i]->shape()));
    }
  }
  std::size_t expected = 0;
  for (const Tensor* p : params) expected += p->size() * 8;
  if (r.remaining() != expected) {
    throw CheckpointError("checkpoint payload is " +
                          std::to_string(r.remaining()) + " bytes, expected " +
                          std::to_string(expected));
  }
  for (Tensor* p : params) {
    for (double& v : p->data()) v = r.f64("tensor payload");
  }
  return model;
}

void save_checkpoint(const ResTdmModel& model,
                     const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError("cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing " + path.string());
}

ResTdmModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace s3d
