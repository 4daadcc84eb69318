#pragma once

#include <filesystem>
#include <string>

#include "screencorr/encoder.hpp"

namespace screencorr {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointHeader {
  int format_version = kCheckpointFormatVersion;
  EncoderConfig config;
  std::string taxonomy_version;
  std::string text_encoder_name;
  std::string text_encoder_version;
  std::string attention_bias;
  std::string model_version;
};

/// Layout: magic "SCRCKPT1", u32 header length, JSON header, u32 tensor count,
/// then per tensor {u32 name length, name, u32 rows, u32 cols, f32 LE data (column-major)}.
void save_checkpoint(const EncoderModel& model, const TextEncoder& text_encoder, const std::filesystem::path& path);

/// Rejects taxonomy or text-encoder mismatches with Error(kCheckpointMismatch).
EncoderModel load_checkpoint(const std::filesystem::path& path, const TextEncoder& text_encoder,
                             CheckpointHeader* header_out = nullptr);

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

}  // namespace screencorr
