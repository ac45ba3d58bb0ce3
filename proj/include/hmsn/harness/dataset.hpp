#pragma once

#include "hmsn/harness/config.hpp"
#include "hmsn/nn/patches.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hmsn::harness {

// Images kept as bytes (HWC); image(i) returns them scaled to [0, 1] and
// standardized with the per-channel mean and std of the whole set.
struct Dataset {
  int height = 0;
  int width = 0;
  int channels = 0;
  int classes = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;
  std::vector<double> mean;  // per channel, on the [0, 1] scale
  std::vector<double> stddev;

  std::size_t size() const { return labels.size(); }
  std::size_t image_bytes() const { return static_cast<std::size_t>(height) * width * channels; }
  nn::Image image(std::size_t i) const;

  // Recomputes mean / stddev from the pixels.
  void fit_normalization();
};

Dataset ingest_dataset(const DatasetConfig& config);

// Balanced class hierarchy: every leaf of a depth x branching tree is one
// class whose latent mean is the sum of its ancestors' offsets; samples add
// Gaussian noise and are rendered through a fixed bank of coloured blobs.
Dataset synthetic_tree(const DatasetConfig& config);

// 3073-byte records: label byte, then 1024 R, 1024 G, 1024 B bytes.
Dataset load_cifar10(const std::string& path, int limit = 0);

// Little-endian: "HMSNRAW\0", u32 version, u32 count, u32 height, u32 width,
// u32 channels, count x i32 labels, pixel bytes (HWC), u64 FNV-1a of all
// preceding bytes.
Dataset load_raw_tensor(const std::string& path, int limit = 0);
void write_raw_tensor(const Dataset& data, const std::string& path);

}  // namespace hmsn::harness
