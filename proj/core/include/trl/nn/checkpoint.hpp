#pragma once

#include <filesystem>
#include <iosfwd>

#include "trl/nn/parameters.hpp"

namespace trl::nn {

// Binary, little-endian:
//   "TRLCKPT1"
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values[]
//   u8 flag (1 when Adam state follows)
//   if flag: u64 step, then per tensor in the same order f64 m[], f64 v[]
inline constexpr char kCheckpointMagic[9] = "TRLCKPT1";

void write_checkpoint(std::ostream& out, const ParameterStore& store, bool with_moments);
/// Loads a store from `in`. Throws "not a checkpoint" on a wrong magic and
/// "truncated checkpoint" on short reads.
ParameterStore read_checkpoint(std::istream& in);

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path, bool with_moments);
ParameterStore load_checkpoint(const std::filesystem::path& path);

/// Copies values, moments and step from `from` into `to`, which must hold
/// the same names and shapes.
void restore_into(const ParameterStore& from, ParameterStore& to);

}  // namespace trl::nn
