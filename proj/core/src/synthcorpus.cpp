#include "screencorr/synthcorpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <toml.hpp>

#include "screencorr/errors.hpp"
#include "screencorr/featurizer.hpp"

namespace screencorr {
namespace {

using B = BaseClass;

constexpr double kLayoutMin = 0.03;
constexpr double kLayoutMax = 0.94;
constexpr std::uint64_t kStyleSeed = 0x5eed5717e;

TemplateSlot slot(std::string role, B base, std::string sub, BoundingBox box, std::vector<std::string> phrases = {},
                  double presence = 1.0, std::string family = {}) {
  return {std::move(role), base, std::move(sub), box, presence, std::move(phrases), std::move(family)};
}

std::vector<ScreenTemplate> build_templates() {
  std::vector<ScreenTemplate> t;

  t.push_back({ScreenCategory::kMediaPlayer,
               {slot("back", B::kIcon, "arrow_down", {0.04, 0.04, 0.11, 0.09}),
                slot("more", B::kIcon, "more", {0.86, 0.04, 0.93, 0.09}),
                slot("artwork", B::kPicture, "", {0.12, 0.14, 0.88, 0.5}),
                slot("track_title", B::kText, "", {0.1, 0.55, 0.75, 0.6},
                     {"Midnight City", "Blue Monday", "Golden Hour", "Ocean Eyes", "Night Drive"}),
                slot("artist", B::kText, "", {0.1, 0.61, 0.6, 0.65},
                     {"The Wanderers", "Luna Park", "Quiet Hours", "Neon Arcade", "Sam Rivers"}),
                slot("favorite", B::kIcon, "favorite", {0.82, 0.56, 0.9, 0.62}, {}, 0.8),
                slot("seek", B::kSlider, "", {0.1, 0.68, 0.9, 0.71}),
                slot("shuffle", B::kIcon, "shuffle", {0.08, 0.77, 0.16, 0.83}, {}, 0.7),
                slot("previous", B::kIcon, "skip_previous", {0.26, 0.77, 0.35, 0.83}),
                slot("play", B::kIcon, "play", {0.44, 0.75, 0.56, 0.85}),
                slot("next", B::kIcon, "skip_next", {0.65, 0.77, 0.74, 0.83}),
                slot("repeat", B::kIcon, "repeat", {0.84, 0.77, 0.92, 0.83}, {}, 0.7)}, {}});

  t.push_back({ScreenCategory::kInAppPurchase,
               {slot("close", B::kIcon, "close", {0.04, 0.04, 0.11, 0.09}),
                slot("hero", B::kPicture, "", {0.2, 0.1, 0.8, 0.3}),
                slot("title", B::kText, "", {0.1, 0.33, 0.9, 0.39},
                     {"Go Premium", "Upgrade to Pro", "Unlock everything", "Try Plus free"}),
                slot("feature_1", B::kText, "", {0.15, 0.42, 0.9, 0.46},
                     {"No ads", "Ad-free listening", "Remove all ads"}),
                slot("feature_2", B::kText, "", {0.15, 0.48, 0.9, 0.52},
                     {"Unlimited downloads", "Offline access", "Download anything"}),
                slot("feature_3", B::kText, "", {0.15, 0.54, 0.9, 0.58},
                     {"Cancel anytime", "No commitment", "Cancel whenever you like"}, 0.7),
                slot("plan_selector", B::kSegmentedControl, "", {0.1, 0.62, 0.9, 0.68}),
                slot("price", B::kText, "", {0.25, 0.71, 0.75, 0.75},
                     {"$4.99 / month", "$39.99 / year", "$9.99 per month", "7 days free, then $2.99"}),
                slot("buy_button", B::kButton, "", {0.1, 0.78, 0.9, 0.85},
                     {"Subscribe", "Start free trial", "Buy now", "Continue"}),
                slot("restore", B::kText, "", {0.3, 0.88, 0.7, 0.92},
                     {"Restore purchases", "Restore purchase", "Already subscribed?"}, 1.0, "link")}, {}});

  t.push_back({ScreenCategory::kLogin,
               {slot("back", B::kIcon, "arrow_back", {0.04, 0.04, 0.11, 0.09}, {}, 0.5),
                slot("logo", B::kPicture, "", {0.35, 0.1, 0.65, 0.22}),
                slot("title", B::kText, "", {0.1, 0.25, 0.9, 0.3},
                     {"Welcome back", "Sign in to continue", "Log in to your account", "Hello again"}),
                slot("username_field", B::kTextField, "", {0.1, 0.34, 0.9, 0.41},
                     {"Email", "Email address", "Your email", "Email or phone"}),
                slot("password_field", B::kTextField, "", {0.1, 0.45, 0.9, 0.52},
                     {"Password", "Enter password", "Your password", "Password (8+ characters)"}),
                slot("remember_me", B::kCheckbox, "off", {0.1, 0.55, 0.16, 0.59}, {}, 0.6),
                slot("forgot_link", B::kText, "", {0.55, 0.55, 0.9, 0.59},
                     {"Forgot password?", "Forgot your password?", "Forgot?"}, 1.0, "link"),
                slot("login_button", B::kButton, "", {0.1, 0.63, 0.9, 0.7},
                     {"Log in", "Login", "Log In", "Log in now"}),
                slot("third_party_button", B::kButton, "", {0.1, 0.74, 0.9, 0.81},
                     {"Continue with Google", "Sign in with Facebook", "Continue with Apple"}, 0.7, "social"),
                slot("signup_link", B::kText, "", {0.25, 0.86, 0.75, 0.9},
                     {"Sign up", "Sign up free", "New here? Sign up"}, 1.0, "link")},
               {{"forgot_link", "signup_link"}}});

  t.push_back({ScreenCategory::kPermissionRequest,
               {slot("dialog", B::kDialog, "", {0.06, 0.25, 0.94, 0.75}),
                slot("permission_icon", B::kIcon, "location", {0.42, 0.29, 0.58, 0.37}),
                slot("title", B::kText, "", {0.12, 0.4, 0.88, 0.46},
                     {"Allow access to your location?", "Allow location access", "Share your location"}),
                slot("body", B::kText, "", {0.12, 0.48, 0.88, 0.58},
                     {"We use your location to show nearby places.", "This helps us find stores near you.",
                      "Your location is only used while the app is open."}),
                slot("allow_button", B::kButton, "", {0.52, 0.62, 0.88, 0.7},
                     {"Allow", "OK", "Allow while using app"}),
                slot("deny_button", B::kButton, "", {0.12, 0.62, 0.48, 0.7},
                     {"Don't allow", "Not now", "Deny"}, 1.0, "secondary")}, {}});

  t.push_back({ScreenCategory::kRegister,
               {slot("back", B::kIcon, "arrow_back", {0.04, 0.04, 0.11, 0.09}),
                slot("title", B::kText, "", {0.1, 0.13, 0.9, 0.19},
                     {"Create account", "Sign up", "Join us", "Get started"}),
                slot("name_field", B::kTextField, "", {0.1, 0.24, 0.9, 0.31}, {"Full name", "Name", "Your name", "First and last name"}),
                slot("email_field", B::kTextField, "", {0.1, 0.35, 0.9, 0.42},
                     {"Email", "Email address", "E-mail", "Your email"}),
                slot("password_field", B::kTextField, "", {0.1, 0.46, 0.9, 0.53},
                     {"Password", "Create password", "Choose a password", "New password"}),
                slot("confirm_field", B::kTextField, "", {0.1, 0.57, 0.9, 0.64},
                     {"Confirm password", "Confirm your password", "Confirm"}, 0.7),
                slot("terms_checkbox", B::kCheckbox, "off", {0.1, 0.68, 0.16, 0.72}),
                slot("terms_text", B::kText, "", {0.2, 0.68, 0.9, 0.72},
                     {"I agree to the Terms", "Accept terms and privacy policy", "I accept the terms of service"}),
                slot("register_button", B::kButton, "", {0.1, 0.76, 0.9, 0.83},
                     {"Create account", "Create my account", "Create an account"}),
                slot("login_link", B::kText, "", {0.15, 0.87, 0.85, 0.91},
                     {"Already have an account? Log in", "Have an account? Log in", "Log in instead"}, 1.0, "link")},
               {{"name_field", "email_field"}, {"terms_text", "login_link"}}});

  t.push_back({ScreenCategory::kPreLogin,
               {slot("hero", B::kPicture, "", {0.1, 0.08, 0.9, 0.45}),
                slot("headline", B::kText, "", {0.1, 0.5, 0.9, 0.56},
                     {"Discover new music", "Plan your next trip", "Cook something new", "Stay in touch"}),
                slot("subtitle", B::kText, "", {0.1, 0.58, 0.9, 0.63},
                     {"Millions of songs, free.", "Everything in one place.", "Join millions of people."}),
                slot("pager", B::kPageControl, "", {0.4, 0.66, 0.6, 0.68}, {}, 0.7),
                slot("signup_button", B::kButton, "", {0.1, 0.72, 0.9, 0.79},
                     {"Get started", "Sign up free", "Create account"}),
                slot("login_button", B::kButton, "", {0.1, 0.81, 0.9, 0.88},
                     {"Log in", "I already have an account", "Sign in"}, 1.0, "secondary"),
                slot("skip", B::kText, "", {0.75, 0.04, 0.93, 0.08}, {"Skip", "Not now", "Maybe later"}, 0.6)}, {}});

  t.push_back({ScreenCategory::kPopUp,
               {slot("dialog", B::kDialog, "", {0.08, 0.2, 0.92, 0.8}),
                slot("close", B::kIcon, "close", {0.8, 0.22, 0.9, 0.28}),
                slot("image", B::kPicture, "", {0.2, 0.29, 0.8, 0.48}),
                slot("title", B::kText, "", {0.14, 0.5, 0.86, 0.56},
                     {"Rate our app", "New features!", "Special offer", "Turn on notifications"}),
                slot("body", B::kText, "", {0.14, 0.57, 0.86, 0.65},
                     {"Tell us what you think.", "See what's new in this version.", "Get 20% off today only."}),
                slot("primary_button", B::kButton, "", {0.14, 0.67, 0.86, 0.73},
                     {"OK", "Got it", "Rate now", "Claim offer"}),
                slot("dismiss", B::kText, "", {0.3, 0.74, 0.7, 0.78}, {"No thanks", "Later", "Dismiss"}, 0.7)}, {}});

  t.push_back({ScreenCategory::kSearch,
               {slot("back", B::kIcon, "arrow_back", {0.03, 0.04, 0.1, 0.09}),
                slot("search_field", B::kTextField, "", {0.12, 0.04, 0.8, 0.09},
                     {"Search", "Search for anything", "What are you looking for?"}),
                slot("search_icon", B::kIcon, "search", {0.83, 0.04, 0.9, 0.09}),
                slot("tabs", B::kSegmentedControl, "", {0.05, 0.12, 0.95, 0.17}, {}, 0.7),
                slot("filter", B::kIcon, "filter", {0.86, 0.19, 0.93, 0.24}, {}, 0.7),
                slot("result_1_image", B::kPicture, "", {0.05, 0.27, 0.25, 0.39}),
                slot("result_1_title", B::kText, "", {0.3, 0.28, 0.93, 0.33},
                     {"Top result", "Best match", "Popular near you"}),
                slot("result_2_image", B::kPicture, "", {0.05, 0.43, 0.25, 0.55}),
                slot("result_2_title", B::kText, "", {0.3, 0.44, 0.93, 0.49},
                     {"Related items", "More like this", "Trending now"}),
                slot("result_3_image", B::kPicture, "", {0.05, 0.59, 0.25, 0.71}, {}, 0.7),
                slot("result_3_title", B::kText, "", {0.3, 0.6, 0.93, 0.65},
                     {"Recently viewed", "Recommended", "From your history"}, 0.7)}, {}});

  t.push_back({ScreenCategory::kWebsiteView,
               {slot("close", B::kIcon, "close", {0.03, 0.04, 0.1, 0.09}),
                slot("url", B::kText, "", {0.14, 0.04, 0.72, 0.09},
                     {"example.com", "news.site.org", "shop.example.net", "blog.example.io"}),
                slot("refresh", B::kIcon, "refresh", {0.75, 0.04, 0.82, 0.09}, {}, 0.7),
                slot("more", B::kIcon, "more", {0.86, 0.04, 0.93, 0.09}),
                slot("banner", B::kPicture, "", {0.05, 0.13, 0.95, 0.35}),
                slot("headline", B::kText, "", {0.05, 0.38, 0.95, 0.45},
                     {"Breaking news today", "Our summer collection", "How to get started"}),
                slot("article", B::kText, "", {0.05, 0.47, 0.95, 0.75},
                     {"Lorem ipsum dolor sit amet.", "Read the full story below.", "Everything you need to know."}),
                slot("share", B::kIcon, "share", {0.8, 0.84, 0.9, 0.9}, {}, 0.8),
                slot("back", B::kIcon, "arrow_back", {0.1, 0.84, 0.2, 0.9})}, {}});
  return t;
}

const std::vector<TemplateSlot>& extra_slots() {
  static const std::vector<TemplateSlot> extras = {
      slot("extra_banner", B::kText, "", {0, 0, 0.5, 0.04}, {"Sponsored", "Limited time offer", "New"}),
      slot("extra_info", B::kIcon, "info", {0, 0, 0.07, 0.05}),
      slot("extra_button", B::kButton, "", {0, 0, 0.4, 0.06}, {"Learn more", "Details", "Open"}),
      slot("extra_toggle", B::kToggle, "on", {0, 0, 0.12, 0.04}),
      slot("extra_image", B::kPicture, "", {0, 0, 0.25, 0.12}),
  };
  return extras;
}

const TemplateSlot* find_slot(const Screen& s, const std::string& role) {
  if (s.category) {
    for (const auto& sl : screen_template(*s.category).slots) {
      if (sl.role == role) return &sl;
    }
  }
  for (const auto& sl : extra_slots()) {
    if (role.starts_with(sl.role)) return &sl;
  }
  return nullptr;
}

// Latent appearance shared by all elements of a family.
const std::vector<double>& style_base(const std::string& key) {
  static std::map<std::string, std::vector<double>> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Rng rng(derive_seed(kStyleSeed, "style:" + key));
  std::vector<double> v(kAppearanceDim);
  for (double& x : v) x = bernoulli(rng, 0.5) ? uniform(rng, 0.75, 0.95) : uniform(rng, 0.05, 0.25);
  return cache.emplace(key, std::move(v)).first->second;
}

BoundingBox clamp_box(BoundingBox b, double lo, double hi) {
  const double w = std::min(b.width(), hi - lo);
  const double h = std::min(b.height(), hi - lo);
  b.x1 = std::clamp(b.x1, lo, hi - w);
  b.y1 = std::clamp(b.y1, lo, hi - h);
  b.x2 = b.x1 + w;
  b.y2 = b.y1 + h;
  return b;
}

std::vector<double> add_noise(std::vector<double> v, double sigma, Rng& rng) {
  for (double& x : v) x = std::clamp(x + sigma * normal(rng), 0.0, 1.0);
  return v;
}

UIElement make_element(const TemplateSlot& sl, const std::string& id, BoundingBox box,
                       const std::vector<double>& palette, Rng& rng) {
  UIElement e;
  e.id = id;
  e.bounds = box;
  e.category = ElementCategory::lookup(sl.base, sl.sub_kind);
  e.role_label = sl.role;
  if (!sl.phrases.empty()) e.text = sl.phrases[uniform_index(rng, sl.phrases.size())];
  std::vector<double> app = style_base(sl.family.empty() ? e.category.label() : sl.family);
  for (std::size_t i = 0; i < app.size(); ++i) app[i] += palette[i];
  e.appearance_vector = add_noise(std::move(app), 0.02, rng);
  return e;
}

std::string role_of(const UIElement& e) {
  if (e.role_label) return *e.role_label;
  const auto dot = e.id.rfind('.');
  return dot == std::string::npos ? e.id : e.id.substr(dot + 1);
}

std::string rename(const std::string& element_id, const std::string& old_screen, const std::string& new_screen) {
  if (element_id.starts_with(old_screen + ".")) return new_screen + element_id.substr(old_screen.size());
  return element_id;
}

std::string pad(int i) {
  std::string s = std::to_string(i);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace

const ScreenTemplate& screen_template(ScreenCategory c) {
  static const std::vector<ScreenTemplate> templates = build_templates();
  return templates.at(static_cast<std::size_t>(c));
}

Screen generate_screen(ScreenCategory category, Rng& rng, const std::string& screen_id, const std::string& app_id) {
  Screen s;
  s.id = screen_id;
  s.app_id = app_id;
  s.category = category;
  s.width_px = 1080;
  s.height_px = 1920;

  std::vector<double> palette(kAppearanceDim);
  for (double& x : palette) x = 0.06 * normal(rng);
  const double shift_y = uniform(rng, -0.03, 0.03);
  const double scale_w = uniform(rng, 0.9, 1.05);

  const ScreenTemplate& tpl = screen_template(category);
  std::map<std::string, BoundingBox> moved;
  for (const auto& [r1, r2] : tpl.swappable) {
    if (!bernoulli(rng, 0.5)) continue;
    const TemplateSlot* a = nullptr;
    const TemplateSlot* b = nullptr;
    for (const auto& sl : tpl.slots) {
      if (sl.role == r1) a = &sl;
      if (sl.role == r2) b = &sl;
    }
    if (a && b) {
      moved[r1] = b->box;
      moved[r2] = a->box;
    }
  }

  for (const auto& sl : tpl.slots) {
    const bool present = sl.presence >= 1.0 || bernoulli(rng, sl.presence);
    if (!present) continue;
    const double jx = uniform(rng, -0.015, 0.015);
    const double jy = uniform(rng, -0.012, 0.012);
    const auto it = moved.find(sl.role);
    const BoundingBox& box = it != moved.end() ? it->second : sl.box;
    const Point c = box.center();
    const double w = box.width() * scale_w;
    const double h = box.height();
    BoundingBox b{c.x - w / 2 + jx, c.y - h / 2 + jy + shift_y, c.x + w / 2 + jx, c.y + h / 2 + jy + shift_y};
    s.elements.push_back(make_element(sl, screen_id + "." + sl.role, clamp_box(b, kLayoutMin, kLayoutMax), palette, rng));
  }
  shuffle(s.elements.begin(), s.elements.end(), rng);
  return s;
}

Screen generate_screen(std::string_view category, Rng& rng, const std::string& screen_id, const std::string& app_id) {
  auto c = screen_category_from_name(category);
  if (!c) throw Error(ErrorCode::kUnknownCategory, "unknown screen category '" + std::string(category) + "'");
  return generate_screen(*c, rng, screen_id, app_id);
}

void PerturbSpec::validate() const {
  if (!(style_noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "style_noise_sigma must be >= 0");
  if (!(text_variant_rate >= 0.0 && text_variant_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "text_variant_rate must lie in [0, 1]");
  }
  if (insert_count < 0 || delete_count < 0) throw Error(ErrorCode::kInvalidConfig, "edit counts must be >= 0");
}

PerturbResult perturb(const Screen& s, const PerturbSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  PerturbResult out;
  Screen t = s;
  const std::string new_id = spec.target_id.empty() ? s.id : spec.target_id;

  for (auto& e : t.elements) {
    if (spec.dx != 0.0 || spec.dy != 0.0) e.bounds = clamp_box(e.bounds.translated(spec.dx, spec.dy), 0.0, 1.0);
    if (spec.style_noise_sigma > 0.0 && e.appearance_vector) {
      e.appearance_vector = add_noise(*e.appearance_vector, spec.style_noise_sigma, rng);
    }
    if (spec.text_variant_rate > 0.0 && e.text && bernoulli(rng, spec.text_variant_rate)) {
      const TemplateSlot* sl = find_slot(s, role_of(e));
      if (sl && sl->phrases.size() > 1) {
        std::vector<std::string> others;
        for (const auto& p : sl->phrases) {
          if (p != *e.text) others.push_back(p);
        }
        e.text = others[uniform_index(rng, others.size())];
      }
    }
  }

  for (int d = 0; d < spec.delete_count && t.elements.size() > 1; ++d) {
    t.elements.erase(t.elements.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, t.elements.size())));
  }
  for (const auto& e : t.elements) out.gt_pairs.emplace_back(e.id, rename(e.id, s.id, new_id));

  std::vector<double> palette(kAppearanceDim, 0.0);
  for (int k = 0; k < spec.insert_count; ++k) {
    const auto& sl = extra_slots()[uniform_index(rng, extra_slots().size())];
    const double x = uniform(rng, kLayoutMin, kLayoutMax - sl.box.width());
    const double y = uniform(rng, kLayoutMin, kLayoutMax - sl.box.height());
    const std::string role = sl.role + "_" + std::to_string(k);
    UIElement e = make_element(sl, s.id + "." + role, {x, y, x + sl.box.width(), y + sl.box.height()}, palette, rng);
    e.role_label = role;
    const auto pos = uniform_index(rng, t.elements.size() + 1);
    t.elements.insert(t.elements.begin() + static_cast<std::ptrdiff_t>(pos), std::move(e));
  }
  if (spec.reorder) shuffle(t.elements.begin(), t.elements.end(), rng);

  if (new_id != s.id) {
    t.id = new_id;
    for (auto& e : t.elements) e.id = rename(e.id, s.id, new_id);
  }
  out.screen = std::move(t);
  return out;
}

void CorpusConfig::validate() const {
  if (screens_per_category < 0 || screens_total < 0 || intra_class_per_category < 0 ||
      same_screen_per_category < 0 || edits < 0) {
    throw Error(ErrorCode::kInvalidConfig, "corpus counts must be >= 0");
  }
  PerturbSpec spec;
  spec.style_noise_sigma = style_noise_sigma;
  spec.text_variant_rate = text_variant_rate;
  spec.validate();
}

nlohmann::json CorpusConfig::to_json() const {
  nlohmann::json cats = nlohmann::json::array();
  for (auto c : categories) cats.push_back(std::string(screen_category_name(c)));
  return {{"seed", seed},
          {"categories", cats},
          {"screens", {{"per_category", screens_per_category}, {"total", screens_total}}},
          {"intra_class", {{"pairs_per_category", intra_class_per_category}}},
          {"same_screen",
           {{"pairs_per_category", same_screen_per_category},
            {"translate", {translate_x, translate_y}},
            {"style_noise_sigma", style_noise_sigma},
            {"text_variant_rate", text_variant_rate},
            {"edits", edits},
            {"reorder", reorder}}}};
}

CorpusConfig CorpusConfig::from_toml(std::string_view text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("corpus config: ") + std::string(e.description()));
  }
  CorpusConfig c;
  c.seed = static_cast<std::uint64_t>(tbl["seed"].value_or<std::int64_t>(0));
  if (auto* cats = tbl["categories"].as_array()) {
    c.categories.clear();
    for (const auto& node : *cats) {
      auto name = node.value<std::string>();
      auto cat = name ? screen_category_from_name(*name) : std::nullopt;
      if (!cat) throw Error(ErrorCode::kUnknownCategory, "unknown screen category in config");
      c.categories.push_back(*cat);
    }
  }
  c.screens_per_category = tbl["screens"]["per_category"].value_or(0);
  c.screens_total = tbl["screens"]["total"].value_or(0);
  c.intra_class_per_category = tbl["intra_class"]["pairs_per_category"].value_or(0);
  auto ss = tbl["same_screen"];
  c.same_screen_per_category = ss["pairs_per_category"].value_or(0);
  if (auto* tr = ss["translate"].as_array(); tr && tr->size() == 2) {
    c.translate_x = (*tr)[0].value_or(c.translate_x);
    c.translate_y = (*tr)[1].value_or(c.translate_y);
  }
  c.style_noise_sigma = ss["style_noise_sigma"].value_or(c.style_noise_sigma);
  c.text_variant_rate = ss["text_variant_rate"].value_or(c.text_variant_rate);
  c.edits = ss["edits"].value_or(c.edits);
  c.reorder = ss["reorder"].value_or(c.reorder);
  c.validate();
  return c;
}

CorpusConfig CorpusConfig::from_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_toml(buf.str());
}

Dataset generate_pairs(const CorpusConfig& config) {
  config.validate();
  Dataset d;
  auto add = [&d](Screen s) {
    const std::string id = s.id;
    d.screens.emplace(id, std::move(s));
  };

  const int ncat = static_cast<int>(config.categories.size());
  int serial = 0;
  auto standalone = [&](ScreenCategory c) {
    const std::string id = std::string(screen_category_name(c)) + "-" + pad(serial);
    Rng rng(derive_seed(config.seed, "screen", static_cast<std::uint64_t>(serial)));
    add(generate_screen(c, rng, id, "app-" + pad(serial)));
    ++serial;
  };
  for (auto c : config.categories) {
    for (int i = 0; i < config.screens_per_category; ++i) standalone(c);
  }
  for (int i = 0; i < config.screens_total && ncat > 0; ++i) standalone(config.categories[static_cast<std::size_t>(i % ncat)]);

  int pair_serial = 0;
  for (auto c : config.categories) {
    const std::string cname(screen_category_name(c));
    for (int i = 0; i < config.intra_class_per_category; ++i, ++pair_serial) {
      const std::string pid = "intra-" + cname + "-" + pad(i);
      Rng ra(derive_seed(config.seed, "intra-a", static_cast<std::uint64_t>(pair_serial)));
      Rng rb(derive_seed(config.seed, "intra-b", static_cast<std::uint64_t>(pair_serial)));
      Screen a = generate_screen(c, ra, pid + "-a", pid + "-app-a");
      Screen b = generate_screen(c, rb, pid + "-b", pid + "-app-b");
      PairFile p{pid, a.id, b.id, {}, PairRelation::kIntraClass, std::nullopt, std::nullopt};
      std::map<std::string, std::string> roles_b;
      for (const auto& e : b.elements) roles_b.emplace(*e.role_label, e.id);
      std::vector<std::pair<std::string, std::string>> gt;
      for (const auto& e : a.elements) {
        auto it = roles_b.find(*e.role_label);
        if (it != roles_b.end()) gt.emplace_back(e.id, it->second);
      }
      std::sort(gt.begin(), gt.end());
      p.gt_pairs = std::move(gt);
      add(std::move(a));
      add(std::move(b));
      d.pairs.push_back(std::move(p));
    }
  }

  for (auto c : config.categories) {
    const std::string cname(screen_category_name(c));
    for (int i = 0; i < config.same_screen_per_category; ++i, ++pair_serial) {
      const std::string pid = "same-" + cname + "-" + pad(i);
      Rng ra(derive_seed(config.seed, "same-a", static_cast<std::uint64_t>(pair_serial)));
      Screen a = generate_screen(c, ra, pid + "-a", pid + "-app");
      PerturbSpec spec;
      spec.dx = config.translate_x;
      spec.dy = config.translate_y;
      spec.style_noise_sigma = config.style_noise_sigma;
      spec.text_variant_rate = config.text_variant_rate;
      spec.reorder = config.reorder;
      spec.seed = derive_seed(config.seed, "perturb", static_cast<std::uint64_t>(pair_serial));
      spec.target_id = pid + "-b";
      for (int k = 0; k < config.edits; ++k) {
        if (bernoulli(ra, 0.5)) {
          ++spec.insert_count;
        } else {
          ++spec.delete_count;
        }
      }
      PerturbResult r = perturb(a, spec);
      r.screen.app_id = a.app_id;
      PairFile p{pid, a.id, r.screen.id, std::move(r.gt_pairs), PairRelation::kSameScreen, std::nullopt,
                 std::nullopt};
      std::sort(p.gt_pairs.begin(), p.gt_pairs.end());
      add(std::move(a));
      add(std::move(r.screen));
      d.pairs.push_back(std::move(p));
    }
  }
  return d;
}

nlohmann::json corpus_manifest(const CorpusConfig& config, const Dataset& d) {
  return {{"generator_version", std::string(kGeneratorVersion)},
          {"taxonomy_version", std::string(kTaxonomyVersion)},
          {"seed", config.seed},
          {"config", config.to_json()},
          {"screen_count", d.screens.size()},
          {"pair_count", d.pairs.size()}};
}

Dataset write_corpus(const CorpusConfig& config, const std::filesystem::path& out) {
  Dataset d = generate_pairs(config);
  d.save(out, corpus_manifest(config, d));
  return d;
}

}  // namespace screencorr
