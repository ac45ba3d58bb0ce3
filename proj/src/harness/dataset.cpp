#include "hmsn/harness/dataset.hpp"

#include "hmsn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hmsn::harness {

nn::Image Dataset::image(std::size_t i) const {
  if (i >= size()) throw Error("image index out of range");
  nn::Image img(height, width, channels);
  const std::uint8_t* src = pixels.data() + i * image_bytes();
  for (std::size_t j = 0; j < image_bytes(); ++j) {
    const std::size_t c = j % static_cast<std::size_t>(channels);
    img.data[j] = (src[j] / 255.0 - mean[c]) / stddev[c];
  }
  return img;
}

void Dataset::fit_normalization() {
  const auto ch = static_cast<std::size_t>(channels);
  std::vector<double> sum(ch, 0.0), sq(ch, 0.0);
  for (std::size_t j = 0; j < pixels.size(); ++j) {
    const double v = pixels[j] / 255.0;
    sum[j % ch] += v;
    sq[j % ch] += v * v;
  }
  const double n = std::max<double>(1.0, static_cast<double>(pixels.size() / std::max<std::size_t>(ch, 1)));
  mean.assign(ch, 0.0);
  stddev.assign(ch, 1.0);
  for (std::size_t c = 0; c < ch; ++c) {
    mean[c] = sum[c] / n;
    const double var = sq[c] / n - mean[c] * mean[c];
    stddev[c] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
}

namespace {

void finish(Dataset& d, int limit) {
  if (limit > 0 && static_cast<std::size_t>(limit) < d.size()) {
    d.labels.resize(static_cast<std::size_t>(limit));
    d.pixels.resize(d.labels.size() * d.image_bytes());
  }
  int max_label = -1;
  for (int y : d.labels) max_label = std::max(max_label, y);
  d.classes = std::max(d.classes, max_label + 1);
  d.fit_normalization();
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset synthetic_tree(const DatasetConfig& cfg) {
  if (cfg.depth < 1 || cfg.branching < 2 || cfg.per_class < 1 || cfg.image_size < 2)
    throw ConfigError("invalid synthetic-tree shape");
  if (!(cfg.noise >= 0.0) || !(cfg.shift >= 0.0)) throw ConfigError("synthetic-tree noise and shift must be >= 0");
  constexpr int latent = 24;
  constexpr int blobs = latent;
  const int side = cfg.image_size;
  int classes = 1;
  for (int l = 0; l < cfg.depth; ++l) classes *= cfg.branching;

  Rng rng = derive_rng(cfg.seed, 0x7eee);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Offsets shrink with depth so siblings are closer than cousins.
  std::vector<Vec> leaf_mean(static_cast<std::size_t>(classes), Vec::Zero(latent));
  int nodes = 1;
  double scale = 2.0;
  for (int l = 0; l < cfg.depth; ++l) {
    nodes *= cfg.branching;
    std::vector<Vec> offset(static_cast<std::size_t>(nodes));
    for (auto& o : offset) {
      o = Vec(latent);
      for (int k = 0; k < latent; ++k) o[k] = normal(rng);
      o *= scale / std::sqrt(static_cast<double>(latent));
    }
    const int span = classes / nodes;
    for (int leaf = 0; leaf < classes; ++leaf) leaf_mean[static_cast<std::size_t>(leaf)] += offset[static_cast<std::size_t>(leaf / span)];
    scale *= 0.6;
  }

  struct Blob {
    double cy, cx, inv2s2;
    double color[3];
  };
  std::vector<Blob> basis(blobs);
  for (auto& b : basis) {
    b.cy = unit(rng) * (side - 1);
    b.cx = unit(rng) * (side - 1);
    const double s = side * (0.12 + 0.12 * unit(rng));
    b.inv2s2 = 1.0 / (2.0 * s * s);
    for (double& c : b.color) c = normal(rng);
  }

  Dataset d;
  d.height = d.width = side;
  d.channels = 3;
  d.classes = classes;
  const std::size_t n = static_cast<std::size_t>(classes) * static_cast<std::size_t>(cfg.per_class);
  d.labels.resize(n);
  d.pixels.resize(n * d.image_bytes());
  std::vector<double> field(static_cast<std::size_t>(side * side * 3));
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    d.labels[i] = label;
    Rng local = derive_rng(cfg.seed, 0x5a3b1e, i);
    Vec x = leaf_mean[static_cast<std::size_t>(label)];
    for (int k = 0; k < latent; ++k) x[k] += cfg.noise * normal(local) / std::sqrt(static_cast<double>(latent)) * 2.0;
    // Nuisance pose: the whole field moves and may be mirrored.
    std::uniform_real_distribution<double> offset(-cfg.shift, cfg.shift);
    const double sy = cfg.shift > 0.0 ? offset(local) : 0.0;
    const double sx = cfg.shift > 0.0 ? offset(local) : 0.0;
    const bool mirrored = cfg.mirror && std::bernoulli_distribution(0.5)(local);
    std::fill(field.begin(), field.end(), 0.0);
    for (int k = 0; k < blobs; ++k) {
      const Blob& b = basis[static_cast<std::size_t>(k)];
      const double cy = b.cy + sy;
      const double cx = (mirrored ? side - 1 - b.cx : b.cx) + sx;
      for (int y = 0; y < side; ++y)
        for (int xx = 0; xx < side; ++xx) {
          const double w = x[k] * std::exp(-((y - cy) * (y - cy) + (xx - cx) * (xx - cx)) * b.inv2s2);
          for (int c = 0; c < 3; ++c) field[static_cast<std::size_t>((y * side + xx) * 3 + c)] += w * b.color[c];
        }
    }
    std::uint8_t* out = d.pixels.data() + i * d.image_bytes();
    for (std::size_t j = 0; j < field.size(); ++j)
      out[j] = static_cast<std::uint8_t>(std::clamp(std::lround(128.0 + 40.0 * field[j]), 0L, 255L));
  }
  finish(d, cfg.limit);
  return d;
}

Dataset load_cifar10(const std::string& path, int limit) {
  constexpr std::size_t record = 3073;
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.empty()) throw FormatError("empty cifar10-binary file", 0);
  if (bytes.size() % record != 0)
    throw FormatError("truncated cifar10-binary record", bytes.size() - bytes.size() % record);
  Dataset d;
  d.height = d.width = 32;
  d.channels = 3;
  d.classes = 10;
  const std::size_t n = bytes.size() / record;
  d.labels.resize(n);
  d.pixels.resize(n * d.image_bytes());
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* r = bytes.data() + i * record;
    if (r[0] > 9) throw FormatError("cifar10 label out of range", i * record);
    d.labels[i] = r[0];
    std::uint8_t* out = d.pixels.data() + i * d.image_bytes();
    for (int p = 0; p < 1024; ++p)
      for (int c = 0; c < 3; ++c) out[p * 3 + c] = r[1 + c * 1024 + p];
  }
  finish(d, limit);
  return d;
}

namespace {

constexpr char kRawMagic[8] = {'H', 'M', 'S', 'N', 'R', 'A', 'W', '\0'};

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (bytes.size() - pos < n) throw FormatError("raw-tensor file truncated", pos);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 8;
    return v;
  }
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

Dataset load_raw_tensor(const std::string& path, int limit) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  Reader r{bytes};
  r.need(8);
  if (std::memcmp(bytes.data(), kRawMagic, 8) != 0) throw FormatError("bad raw-tensor magic", 0);
  r.pos = 8;
  const std::size_t version_at = r.pos;
  if (r.u32() != 1) throw FormatError("unsupported raw-tensor version", version_at);
  Dataset d;
  const std::uint32_t n = r.u32();
  d.height = static_cast<int>(r.u32());
  d.width = static_cast<int>(r.u32());
  d.channels = static_cast<int>(r.u32());
  if (d.height < 1 || d.width < 1 || d.channels < 1) throw FormatError("invalid raw-tensor dimensions", 12);
  d.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t at = r.pos;
    d.labels[i] = static_cast<std::int32_t>(r.u32());
    if (d.labels[i] < 0) throw FormatError("negative label", at);
  }
  const std::size_t count = static_cast<std::size_t>(n) * d.image_bytes();
  r.need(count);
  d.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos), bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + count));
  r.pos += count;
  const std::size_t body = r.pos;
  const std::uint64_t stored = r.u64();
  if (r.pos != bytes.size()) throw FormatError("trailing bytes after raw-tensor checksum", r.pos);
  if (fnv1a64(bytes.data(), body) != stored) throw ChecksumMismatch("raw-tensor checksum mismatch in " + path);
  finish(d, limit);
  return d;
}

void write_raw_tensor(const Dataset& d, const std::string& path) {
  std::vector<std::uint8_t> out(kRawMagic, kRawMagic + 8);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(d.size()));
  put_u32(out, static_cast<std::uint32_t>(d.height));
  put_u32(out, static_cast<std::uint32_t>(d.width));
  put_u32(out, static_cast<std::uint32_t>(d.channels));
  for (int y : d.labels) put_u32(out, static_cast<std::uint32_t>(y));
  out.insert(out.end(), d.pixels.begin(), d.pixels.end());
  const std::uint64_t h = fnv1a64(out.data(), out.size());
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(h >> (8 * i)));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("write failed: " + path);
}

Dataset ingest_dataset(const DatasetConfig& config) {
  if (config.format == "synthetic-tree") return synthetic_tree(config);
  if (config.format == "cifar10-binary") return load_cifar10(config.path, config.limit);
  if (config.format == "raw-tensor") return load_raw_tensor(config.path, config.limit);
  throw ConfigError("unknown dataset format: " + config.format);
}

}  // namespace hmsn::harness
