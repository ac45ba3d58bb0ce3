#pragma once

#include "hmsn/harness/model.hpp"

#include <string>

namespace hmsn::harness {

// Single file, little-endian:
//   "HMSNCKPT", u32 version, u64 length + resolved config JSON, i64 step,
//   u64 entry count, entries, u64 FNV-1a of all preceding bytes.
// An entry is u32 name length, name, u8 kind, u64 rows, u64 cols and
// rows*cols f64 values. Names are prefixed anchor/, target/, proto/ and
// opt/<param>/{m,v,step}.
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace hmsn::harness
