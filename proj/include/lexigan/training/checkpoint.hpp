#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lexigan/training/trainer.hpp"

namespace lexigan::training {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian: "FWGN", u32 version, u64 step, u32-length config blob,
/// u32 tensor count, tensors {u16 name length, name, u8 dtype (0 f32, 1 f64),
/// u8 rank, u32 dims[rank], data}, then the rng state as 4 x u64.
///
/// Tensor names: generator/*, discriminator/*, qnet/*, then per optimizer
/// opt/<net>/first/*, opt/<net>/second/*, opt/<net>/step, and data/order,
/// data/cursor. Counters are stored as f64 scalars.
std::vector<unsigned char> encode_checkpoint(const TrainState& state);
TrainState decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace lexigan::training
