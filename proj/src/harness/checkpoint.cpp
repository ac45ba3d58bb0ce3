#include "hmsn/harness/checkpoint.hpp"

#include "hmsn/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hmsn::harness {

static_assert(std::endian::native == std::endian::little, "checkpoints are written on little-endian hosts");

namespace {

constexpr char kMagic[8] = {'H', 'M', 'S', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <class T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void tensor(const std::string& name, const Tensor& t, nn::ParamKind kind) {
    pod(static_cast<std::uint32_t>(name.size()));
    raw(name.data(), name.size());
    pod(static_cast<std::uint8_t>(kind));
    pod(static_cast<std::uint64_t>(t.rows()));
    pod(static_cast<std::uint64_t>(t.cols()));
    raw(t.data(), static_cast<std::size_t>(t.size()) * sizeof(double));
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b, std::size_t end) : b_(b), end_(end) {}

  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw FormatError("checkpoint truncated", pos_);
  }
  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Tensor tensor(std::size_t rows, std::size_t cols) {
    if (rows > (1u << 30) || cols > (1u << 30)) throw FormatError("implausible tensor shape", pos_);
    need(rows * cols * sizeof(double));
    Tensor t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::memcpy(t.data(), b_.data() + pos_, rows * cols * sizeof(double));
    pos_ += rows * cols * sizeof(double);
    return t;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const TrainState& s, const std::string& path) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.pod(kVersion);
  const std::string config = s.model.config.to_json();
  w.pod(static_cast<std::uint64_t>(config.size()));
  w.raw(config.data(), config.size());
  w.pod(static_cast<std::int64_t>(s.step));
  std::uint64_t count = s.model.anchor.size() + s.model.target.size() + s.model.protos.size() +
                        3 * s.optimizer.states().size();
  w.pod(count);
  for (const auto& [name, p] : s.model.anchor) w.tensor("anchor/" + name, p.value, p.kind);
  for (const auto& [name, p] : s.model.target) w.tensor("target/" + name, p.value, p.kind);
  for (const auto& [name, p] : s.model.protos) w.tensor("proto/" + name, p.value, p.kind);
  for (const auto& [name, st] : s.optimizer.states()) {
    w.tensor("opt/" + name + "/m", st.m, nn::ParamKind::Buffer);
    w.tensor("opt/" + name + "/v", st.v, nn::ParamKind::Buffer);
    w.tensor("opt/" + name + "/step", Tensor::Constant(1, 1, static_cast<double>(st.step)), nn::ParamKind::Buffer);
  }
  const std::uint64_t h = fnv1a64(w.bytes().data(), w.bytes().size());
  w.pod(h);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write checkpoint " + tmp);
    f.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    f.flush();
    if (!f) throw Error("checkpoint write failed (disk full?): " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot move checkpoint into place: " + path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint " + path);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  // magic, version, config length, step, entry count, checksum
  if (bytes.size() < sizeof kMagic + 4 + 8 + 8 + 8 + 8) throw FormatError("checkpoint too short", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw FormatError("not a checkpoint (bad magic)", 0);
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, 8);
  if (fnv1a64(bytes.data(), body) != stored) throw ChecksumMismatch("checkpoint checksum mismatch in " + path);

  Reader r(bytes, body);
  r.str(sizeof kMagic);
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), 8);
  const auto config_len = r.pod<std::uint64_t>();
  TrainState s;
  s.model.config = RunConfig::from_json(r.str(config_len));
  s.optimizer = make_optimizer(s.model.config);
  s.step = r.pod<std::int64_t>();
  const auto count = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t at = r.pos();
    const std::string name = r.str(r.pod<std::uint32_t>());
    const auto kind_byte = r.pod<std::uint8_t>();
    if (kind_byte > 2) throw FormatError("bad parameter kind", at);
    const auto kind = static_cast<nn::ParamKind>(kind_byte);
    const auto rows = r.pod<std::uint64_t>();
    const auto cols = r.pod<std::uint64_t>();
    Tensor t = r.tensor(rows, cols);
    const auto slash = name.find('/');
    const std::string group = name.substr(0, slash);
    const std::string rest = slash == std::string::npos ? "" : name.substr(slash + 1);
    if (group == "anchor") {
      s.model.anchor.add(rest, std::move(t), kind);
    } else if (group == "target") {
      s.model.target.add(rest, std::move(t), kind);
    } else if (group == "proto") {
      s.model.protos.add(rest, std::move(t), kind);
    } else if (group == "opt") {
      const auto last = rest.rfind('/');
      if (last == std::string::npos) throw FormatError("bad optimizer entry " + name, at);
      optim::AdamState& st = s.optimizer.states()[rest.substr(0, last)];
      const std::string field = rest.substr(last + 1);
      if (field == "m") st.m = std::move(t);
      else if (field == "v") st.v = std::move(t);
      else if (field == "step") st.step = static_cast<long>(t(0, 0));
      else throw FormatError("bad optimizer field " + name, at);
    } else {
      throw FormatError("unknown checkpoint entry " + name, at);
    }
  }
  if (r.pos() != body) throw FormatError("trailing bytes in checkpoint", r.pos());
  if (!s.model.anchor.same_structure(s.model.target)) throw FormatError("anchor and target structures differ", 0);
  if (!s.model.protos.contains("proto")) throw FormatError("checkpoint has no prototype bank", 0);
  return s;
}

}  // namespace hmsn::harness
