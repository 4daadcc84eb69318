#include <gtest/gtest.h>

#include <set>

#include "screencorr/errors.hpp"
#include "screencorr/taxonomy.hpp"

namespace screencorr {
namespace {

TEST(Taxonomy, HasEightyThreeEntries) {
  EXPECT_EQ(category_table().size(), 83u);
  EXPECT_EQ(kCategoryCount, 83);
}

TEST(Taxonomy, IndexIsABijection) {
  std::set<std::string> labels;
  for (int i = 0; i < kCategoryCount; ++i) {
    const auto c = ElementCategory::from_index(i);
    EXPECT_EQ(c.flat_index(), i);
    const auto back = ElementCategory::lookup(c.base(), c.sub_kind());
    EXPECT_EQ(back.flat_index(), i) << c.label();
    EXPECT_EQ(find_category_index(c.base(), c.sub_kind()), i);
    labels.insert(c.label());
  }
  EXPECT_EQ(labels.size(), 83u);
}

TEST(Taxonomy, SelectionStateSplitsToggleAndCheckbox) {
  EXPECT_NE(ElementCategory::lookup(BaseClass::kToggle, "on"), ElementCategory::lookup(BaseClass::kToggle, "off"));
  EXPECT_NE(ElementCategory::lookup(BaseClass::kCheckbox, "on"),
            ElementCategory::lookup(BaseClass::kCheckbox, "off"));
  EXPECT_EQ(ElementCategory::lookup(BaseClass::kToggle), ElementCategory::lookup(BaseClass::kToggle, "off"));
}

TEST(Taxonomy, UnknownIconFallsBackToGenericIcon) {
  const auto generic = ElementCategory::lookup(BaseClass::kIcon);
  EXPECT_EQ(ElementCategory::lookup(BaseClass::kIcon, "no-such-icon"), generic);
  EXPECT_EQ(generic.label(), "Icon");
  EXPECT_EQ(ElementCategory::lookup(BaseClass::kIcon, "add").label(), "Icon:add");
}

TEST(Taxonomy, EveryBaseClassPresent) {
  std::set<BaseClass> bases;
  for (const auto& e : category_table()) bases.insert(e.base);
  EXPECT_EQ(static_cast<int>(bases.size()), kBaseClassCount);
}

TEST(Taxonomy, OutOfRangeIndexThrows) {
  EXPECT_THROW(ElementCategory::from_index(83), Error);
  EXPECT_THROW(ElementCategory::from_index(-1), Error);
}

TEST(Taxonomy, BaseClassNamesRoundTrip) {
  for (const auto& e : category_table()) EXPECT_EQ(base_class_from_name(base_class_name(e.base)), e.base);
  EXPECT_FALSE(base_class_from_name("Widget"));
}

}  // namespace
}  // namespace screencorr
