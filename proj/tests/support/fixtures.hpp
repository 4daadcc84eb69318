#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "screencorr/encoder.hpp"
#include "screencorr/screen.hpp"

namespace screencorr::testing {

UIElement element(std::string id, BaseClass base, BoundingBox box, std::optional<std::string> text = std::nullopt,
                  std::string_view sub_kind = {});

/// Five distinct elements with text and appearance vectors.
Screen small_screen(const std::string& id = "s1");

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

EncoderConfig tiny_config(int hidden = 8, int layers = 1, int heads = 2);

}  // namespace screencorr::testing
