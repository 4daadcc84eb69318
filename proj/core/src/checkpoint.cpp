#include "screencorr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

constexpr char kMagic[8] = {'S', 'C', 'R', 'C', 'K', 'P', 'T', '1'};
constexpr std::string_view kAttentionBias = "additive-2d-bucketed";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error(ErrorCode::kIo, "truncated checkpoint");
  return v;
}

std::string read_bytes(std::istream& in, std::size_t n) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw Error(ErrorCode::kIo, "truncated checkpoint");
  return s;
}

CheckpointHeader read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kIo, path.string() + " is not a screencorr checkpoint");
  }
  const auto j = nlohmann::json::parse(read_bytes(in, read_u32(in)), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kIo, "corrupt checkpoint header");
  CheckpointHeader h;
  h.format_version = j.value("format_version", 0);
  if (h.format_version != kCheckpointFormatVersion) {
    throw Error(ErrorCode::kCheckpointMismatch, "unsupported checkpoint format " + std::to_string(h.format_version));
  }
  h.config = EncoderConfig::from_json(j.at("config"));
  h.taxonomy_version = j.value("taxonomy_version", "");
  h.text_encoder_name = j.at("text_encoder").value("name", "");
  h.text_encoder_version = j.at("text_encoder").value("version", "");
  h.attention_bias = j.value("attention_bias", "");
  h.model_version = j.value("model_version", "");
  return h;
}

}  // namespace

void save_checkpoint(const EncoderModel& model, const TextEncoder& text_encoder, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const nlohmann::json header = {
      {"format_version", kCheckpointFormatVersion},
      {"config", model.config().to_json()},
      {"taxonomy_version", std::string(kTaxonomyVersion)},
      {"text_encoder", {{"name", text_encoder.name()}, {"version", text_encoder.version()}}},
      {"attention_bias", std::string(kAttentionBias)},
      {"model_version", model.version()},
  };
  const std::string hs = header.dump();
  out.write(kMagic, sizeof kMagic);
  write_u32(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  const auto& tensors = model.layout().tensors();
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  std::vector<float> buf;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const TensorSpec& t = tensors[i];
    write_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.rows));
    write_u32(out, static_cast<std::uint32_t>(t.cols));
    const auto values = model.values().subspan(t.offset, t.size());
    buf.assign(values.begin(), values.end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_header(in, path);
}

EncoderModel load_checkpoint(const std::filesystem::path& path, const TextEncoder& text_encoder,
                             CheckpointHeader* header_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  CheckpointHeader h = read_header(in, path);
  if (h.taxonomy_version != kTaxonomyVersion) {
    throw Error(ErrorCode::kCheckpointMismatch,
                "checkpoint taxonomy " + h.taxonomy_version + " != " + std::string(kTaxonomyVersion));
  }
  if (h.text_encoder_name != text_encoder.name() || h.text_encoder_version != text_encoder.version()) {
    throw Error(ErrorCode::kCheckpointMismatch, "checkpoint text encoder " + h.text_encoder_name + "/" +
                                                    h.text_encoder_version + " != " + text_encoder.name() + "/" +
                                                    text_encoder.version());
  }
  if (h.attention_bias != kAttentionBias) {
    throw Error(ErrorCode::kCheckpointMismatch, "unsupported attention bias '" + h.attention_bias + "'");
  }
  EncoderModel model(h.config);
  const std::uint32_t count = read_u32(in);
  if (count != model.layout().tensors().size()) throw Error(ErrorCode::kCheckpointMismatch, "tensor count mismatch");
  std::vector<float> buf;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = read_bytes(in, read_u32(in));
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    auto idx = model.layout().find(name);
    if (!idx) throw Error(ErrorCode::kCheckpointMismatch, "unexpected tensor '" + name + "'");
    const TensorSpec& t = model.layout()[*idx];
    if (rows != t.rows || cols != t.cols) throw Error(ErrorCode::kCheckpointMismatch, "shape mismatch for " + name);
    buf.resize(t.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw Error(ErrorCode::kIo, "truncated checkpoint");
    std::copy(buf.begin(), buf.end(), model.values().begin() + static_cast<std::ptrdiff_t>(t.offset));
  }
  h.model_version = model.version();
  if (header_out) *header_out = h;
  return model;
}

}  // namespace screencorr
