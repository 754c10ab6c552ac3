#ifndef DEMNET_CHECKPOINT_HPP
#define DEMNET_CHECKPOINT_HPP

#include <cstdint>
#include <string>

#include "demnet/data_pipeline.hpp"
#include "demnet/digest.hpp"
#include "demnet/model.hpp"
#include "demnet/optimizer.hpp"

namespace demnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume training or run inference: topology,
/// parameters, optimizer moments, input normalization, and the digest of
/// the run configuration that produced it. Round-trips bit-exactly.
struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  Digest config_digest{};
  std::uint32_t epoch = 0;
  ModelParams params;
  AdamState adam;
  NormalizationStats stats;
};

/// Little-endian binary, magic "DEMN"; see docs/formats.md. Writes to a
/// temporary file and renames, so a crash never leaves a torn checkpoint.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Rejects bad magic, unsupported versions (naming both), truncation,
/// and malformed sections.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace demnet

#endif  // DEMNET_CHECKPOINT_HPP
