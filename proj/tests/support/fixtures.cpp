#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

#include "screencorr/featurizer.hpp"
#include "screencorr/random.hpp"

namespace screencorr::testing {

UIElement element(std::string id, BaseClass base, BoundingBox box, std::optional<std::string> text,
                  std::string_view sub_kind) {
  UIElement e;
  e.id = std::move(id);
  e.bounds = box;
  e.category = ElementCategory::lookup(base, sub_kind);
  e.text = std::move(text);
  return e;
}

Screen small_screen(const std::string& id) {
  Screen s;
  s.id = id;
  s.app_id = "app";
  s.category = ScreenCategory::kLogin;
  s.elements = {
      element(id + ".title", BaseClass::kText, {0.1, 0.1, 0.9, 0.16}, "Welcome back"),
      element(id + ".user", BaseClass::kTextField, {0.1, 0.3, 0.9, 0.37}, "Username"),
      element(id + ".pass", BaseClass::kTextField, {0.1, 0.42, 0.9, 0.49}, "Password"),
      element(id + ".login", BaseClass::kButton, {0.1, 0.6, 0.9, 0.67}, "Log in"),
      element(id + ".back", BaseClass::kIcon, {0.04, 0.03, 0.11, 0.08}, std::nullopt, "arrow_back"),
  };
  Rng rng(42);
  for (auto& e : s.elements) {
    std::vector<double> v(kAppearanceDim);
    for (double& x : v) x = uniform01(rng);
    e.appearance_vector = std::move(v);
  }
  return s;
}

std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("screencorr-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

EncoderConfig tiny_config(int hidden, int layers, int heads) {
  EncoderConfig c;
  c.hidden = hidden;
  c.layers = layers;
  c.heads = heads;
  c.dropout = 0.0;
  c.seed = 3;
  return c;
}

}  // namespace screencorr::testing
