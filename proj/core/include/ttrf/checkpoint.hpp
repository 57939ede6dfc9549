#pragma once

#include "ttrf/config.hpp"
#include "ttrf/field.hpp"
#include "ttrf/network.hpp"
#include "ttrf/optimizer.hpp"
#include "ttrf/triangulation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace ttrf {

/// Everything needed to resume training or render: config, mesh, features,
/// network, optimizer moments and the step counter.
struct TrainState {
  TrainConfig config;
  std::int64_t step = 0;
  TetMesh mesh;
  FeatureField<float> field;
  RadianceMlp<float> mlp;
  Optimizer<float> optimizer;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, little-endian: "TTRF", u32 version, then sections of
/// (4-byte tag, u64 byte length, payload): CONF (key = value text),
/// META (u64 step, u64 mesh hash), MESH, FEAT, MLP_, MOMS.
void write_checkpoint(std::ostream& out, const TrainState& state);
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);

/// Throws ParseError on bad magic, unknown version, truncated or
/// inconsistent sections (including a mesh hash mismatch).
TrainState read_checkpoint(std::istream& in);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace ttrf
