#pragma once

#include <filesystem>
#include <vector>

#include "mixcon/network.hpp"

namespace mixcon {

// Checkpoint layout, little-endian, no padding:
//   "MXCN"  u32 version (1)  u32 tensor count
//   per tensor: u32 rank, rank x u32 dims, prod(dims) x f64 payload
// Tensors are the weight/bias pairs of Network::parameter_tensors().
// The layer structure itself is not stored; loading binds the tensors to a
// caller-supplied NetworkSpec.

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Network& net, const std::filesystem::path& path);
std::vector<Tensor> load_checkpoint_tensors(const std::filesystem::path& path);
/// Loads tensors and checks them against `spec`; a shape mismatch is a
/// FormatError naming the tensor's byte offset.
Network load_checkpoint(const std::filesystem::path& path, const NetworkSpec& spec);

// In-memory forms used by the file functions.
std::vector<unsigned char> encode_checkpoint(const Network& net);
std::vector<Tensor> decode_checkpoint(const std::vector<unsigned char>& bytes);

}  // namespace mixcon
