#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "screencorr/checkpoint.hpp"
#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

using testing::temp_dir;
using testing::tiny_config;

class OtherTextEncoder final : public TextEncoder {
 public:
  std::optional<Eigen::VectorXd> encode(std::string_view) const override { return std::nullopt; }
  std::string name() const override { return "other"; }
  std::string version() const override { return "9"; }
};

TEST(Checkpoint, RoundTripAtFloatPrecision) {
  const HashingTextEncoder enc;
  const EncoderModel m = init_model(tiny_config(16, 2, 2));
  const auto path = temp_dir("ckpt") / "m.ckpt";
  save_checkpoint(m, enc, path);
  CheckpointHeader h;
  const EncoderModel back = load_checkpoint(path, enc, &h);
  EXPECT_EQ(back.config(), m.config());
  ASSERT_EQ(back.values().size(), m.values().size());
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(m.values()[i])));
  }
  EXPECT_EQ(h.format_version, kCheckpointFormatVersion);
  EXPECT_EQ(h.taxonomy_version, std::string(kTaxonomyVersion));
  EXPECT_EQ(h.text_encoder_name, enc.name());
  EXPECT_FALSE(h.attention_bias.empty());
  EXPECT_EQ(h.model_version, back.version());
}

TEST(Checkpoint, ReloadIsStable) {
  const HashingTextEncoder enc;
  const auto dir = temp_dir("ckpt2");
  save_checkpoint(init_model(tiny_config()), enc, dir / "a.ckpt");
  const EncoderModel a = load_checkpoint(dir / "a.ckpt", enc);
  save_checkpoint(a, enc, dir / "b.ckpt");
  EXPECT_EQ(load_checkpoint(dir / "b.ckpt", enc).version(), a.version());
}

TEST(Checkpoint, RejectsOtherTextEncoder) {
  const HashingTextEncoder enc;
  const auto path = temp_dir("ckpt3") / "m.ckpt";
  save_checkpoint(init_model(tiny_config()), enc, path);
  try {
    load_checkpoint(path, OtherTextEncoder{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCheckpointMismatch);
  }
}

TEST(Checkpoint, RejectsGarbageAndMissingFiles) {
  const HashingTextEncoder enc;
  const auto dir = temp_dir("ckpt4");
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(dir / "junk.ckpt", enc), Error);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt", enc), Error);
}

TEST(Checkpoint, TruncatedFileRejected) {
  const HashingTextEncoder enc;
  const auto dir = temp_dir("ckpt5");
  save_checkpoint(init_model(tiny_config()), enc, dir / "m.ckpt");
  std::filesystem::resize_file(dir / "m.ckpt", std::filesystem::file_size(dir / "m.ckpt") - 16);
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt", enc), Error);
}

}  // namespace
}  // namespace screencorr
