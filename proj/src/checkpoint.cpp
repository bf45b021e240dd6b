#include "geocnn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "geocnn/errors.hpp"

namespace geocnn {
namespace {

constexpr char kMagic[4] = {'L', 'N', 'C', 'K'};

template <typename T>
constexpr std::uint8_t precision_tag() {
  return sizeof(T) == 4 ? 1 : 2;
}

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(U)>>(v);
    out_.insert(out_.end(), raw.begin(), raw.end());
  }
  void put_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    std::array<std::uint8_t, sizeof(U)> raw;
    std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return std::bit_cast<U>(raw);
  }
  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

template <typename U, typename T>
void read_values(Reader& r, Tensor<T>& dst) {
  for (auto& v : dst.data()) v = static_cast<T>(r.get<U>("tensor values"));
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> serialize_checkpoint(const Network<T>& net) {
  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put(kCheckpointVersion);
  w.put_string(net.describe().dump());
  const auto params = net.parameters();
  w.put(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    const Tensor<T>& t = p.param->value;
    w.put_string(p.name);
    w.put(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.put(static_cast<std::uint32_t>(d));
    w.put(precision_tag<T>());
    w.put_bytes(t.data().data(), t.size() * sizeof(T));
  }
  return w.take();
}

template <typename T>
Network<T> parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(sizeof kMagic, "magic");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)", 0);
  }
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.get<std::uint8_t>("magic");
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const std::size_t desc_at = r.pos();
  const std::string desc = r.get_string("descriptor");
  Network<T> net = [&] {
    try {
      return Network<T>::from_description(nlohmann::json::parse(desc));
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("malformed descriptor: ") + e.what(), desc_at);
    } catch (const Error& e) {
      throw CheckpointError(std::string("invalid descriptor: ") + e.what(), desc_at);
    }
  }();

  const auto params = net.parameters();
  const std::size_t count_at = r.pos();
  const auto count = r.get<std::uint32_t>("tensor count");
  if (count != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(count) +
                              " tensors but the architecture has " + std::to_string(params.size()),
                          count_at);
  }
  for (const auto& p : params) {
    const std::size_t at = r.pos();
    const std::string name = r.get_string("tensor name");
    if (name != p.name) {
      throw CheckpointError("expected tensor '" + p.name + "', found '" + name + "'", at);
    }
    const auto rank = r.get<std::uint8_t>("tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint32_t>("tensor dims");
    if (shape != p.param->value.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_to_string(shape) +
                                ", expected " + shape_to_string(p.param->value.shape()),
                            at);
    }
    const std::size_t tag_at = r.pos();
    const auto tag = r.get<std::uint8_t>("precision tag");
    const std::size_t width = tag == 1 ? 4 : tag == 2 ? 8 : 0;
    if (width == 0) {
      throw CheckpointError("unknown precision tag " + std::to_string(tag), tag_at);
    }
    r.need(width * shape_numel(shape), "tensor values");
    if (tag == 1) {
      read_values<float>(r, p.param->value);
    } else {
      read_values<double>(r, p.param->value);
    }
  }
  if (r.remaining() != 0) {
    throw CheckpointError(std::to_string(r.remaining()) + " trailing bytes after last tensor",
                          r.pos());
  }
  return net;
}

template <typename T>
void save_checkpoint(const Network<T>& net, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

template <typename T>
Network<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string(), 0);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return parse_checkpoint<T>(bytes);
}

template std::vector<std::uint8_t> serialize_checkpoint(const Network<float>&);
template std::vector<std::uint8_t> serialize_checkpoint(const Network<double>&);
template Network<float> parse_checkpoint(const std::vector<std::uint8_t>&);
template Network<double> parse_checkpoint(const std::vector<std::uint8_t>&);
template void save_checkpoint(const Network<float>&, const std::filesystem::path&);
template void save_checkpoint(const Network<double>&, const std::filesystem::path&);
template Network<float> load_checkpoint(const std::filesystem::path&);
template Network<double> load_checkpoint(const std::filesystem::path&);

}  // namespace geocnn
