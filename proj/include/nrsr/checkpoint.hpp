#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nrsr/optim.hpp"

namespace nrsr {

// Checkpoint container. All integers are unsigned 32-bit little-endian.
//
//   "NRSR1"                               5-byte magic
//   u32 meta_count
//     { u32 key_len, key bytes, u32 value_len, value bytes } * meta_count
//   u32 record_count
//     { u32 name_len, name bytes, u32 n, u32 c, u32 h, u32 w,
//       n*c*h*w IEEE-754 float32 little-endian } * record_count
//
// Parameter records use "<layer>/<block>" names, for example
// "lfcr/fc03/weight" or "vdsr/conv20/bias". Optimizer state, when present,
// is stored as "adam/m/<param>" and "adam/v/<param>" records plus the
// "adam.step" metadata entry.
inline constexpr char kCheckpointMagic[] = "NRSR1";

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<TensorRecord> records;

  const TensorRecord* find(const std::string& name) const;
  std::string meta(const std::string& key, const std::string& fallback = {}) const;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_checkpoint(const Checkpoint& checkpoint, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);

void store_parameters(Checkpoint& checkpoint, const ParameterList<float>& params);
/// Copies stored values into params. Throws FormatError on a missing record
/// or shape mismatch.
void restore_parameters(const Checkpoint& checkpoint, const ParameterList<float>& params);

void store_optimizer(Checkpoint& checkpoint, const Adam<float>& adam);
void restore_optimizer(const Checkpoint& checkpoint, Adam<float>& adam);
bool has_optimizer_state(const Checkpoint& checkpoint);

}  // namespace nrsr
