#pragma once

// Binary parameter checkpoints.
//
// Layout (all integers and floats little-endian):
//   char[8]  magic "TRMCKPT1"
//   u32      kind        0 = dense network, 1 = raw tensor
//   u32      activation  (dense only; 0 tanh, 1 relu, 2 linear)
//   u32      rank        number of shape entries
//   u32[rank] shape      layer sizes (dense) or tensor dimensions
//   u64      seed
//   u64      step        optimizer step counter
//   u64      epoch
//   u64      count       number of f64 values that follow
//   f64[count]
//
// Every checkpoint is accompanied by a JSON sidecar `<path>.json` holding the
// same header fields in readable form.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "thermorom/diffcore.hpp"

namespace thermorom {

enum class CheckpointKind : std::uint32_t { dense = 0, tensor = 1 };

struct CheckpointHeader {
    CheckpointKind kind = CheckpointKind::dense;
    Activation activation = Activation::linear;
    std::vector<int> shape;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::uint64_t epoch = 0;
};

struct CheckpointRecord {
    CheckpointHeader header;
    std::vector<double> values;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointRecord& record);
CheckpointRecord read_checkpoint(const std::filesystem::path& path);

void save_net(const std::filesystem::path& path, const DenseNet& net, std::uint64_t seed = 0, std::uint64_t step = 0,
              std::uint64_t epoch = 0);
DenseNet load_net(const std::filesystem::path& path, CheckpointHeader* header = nullptr);

// Little-endian f64 helpers shared with the snapshot archive.
void write_f64_le(std::ostream& out, std::span<const double> values);
void read_f64_le(std::istream& in, std::span<double> values);

}  // namespace thermorom
