#include <gtest/gtest.h>

#include "irds/text.hpp"
#include "test_support.hpp"

namespace irds {
namespace {

using testing::Rng;

TEST(Utf8, Validation) {
  EXPECT_TRUE(is_valid_utf8(""));
  EXPECT_TRUE(is_valid_utf8("plain"));
  EXPECT_TRUE(is_valid_utf8("caf\xC3\xA9 \xE2\x82\xAC \xF0\x9F\x98\x80"));
  EXPECT_FALSE(is_valid_utf8("\xC0\xAF"));              // overlong '/'
  EXPECT_FALSE(is_valid_utf8("\xED\xA0\x80"));          // surrogate
  EXPECT_FALSE(is_valid_utf8("\xF4\x90\x80\x80"));      // above U+10FFFF
  EXPECT_FALSE(is_valid_utf8("\xE2\x82"));              // truncated
  EXPECT_FALSE(is_valid_utf8("\x80"));                  // stray continuation
}

TEST(Utf8, SanitizeCountsReplacements) {
  std::size_t replaced = 0;
  EXPECT_EQ(sanitize_utf8("ok", replaced), "ok");
  EXPECT_EQ(replaced, 0u);
  EXPECT_EQ(sanitize_utf8("a\xFF" "b\xE2\x82", replaced), "a\xEF\xBF\xBD" "b\xEF\xBF\xBD");
  EXPECT_EQ(replaced, 2u);
}

TEST(Utf8, SanitizedOutputIsAlwaysValid) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    std::string bytes(testing::uniform(rng, 0, 64), '\0');
    for (auto& c : bytes) c = static_cast<char>(rng());
    std::size_t replaced = 0;
    EXPECT_TRUE(is_valid_utf8(sanitize_utf8(bytes, replaced)));
  }
}

TEST(Latin1, EveryByteBecomesItsCodePoint) {
  std::string all;
  for (int b = 0; b < 256; ++b) all.push_back(static_cast<char>(b));
  EXPECT_EQ(latin1_to_utf8(all), testing::latin1_misdecode(all));
}

TEST(DoubleEncoding, Examples) {
  // The mojibake form is derived from the clean string, not hard-coded.
  const std::string clean = "caf\xC3\xA9";
  const auto mojibake = testing::latin1_misdecode(clean);
  EXPECT_EQ(mojibake, "caf\xC3\x83\xC2\xA9");
  EXPECT_EQ(fix_double_encoding(mojibake), clean);
  EXPECT_EQ(fix_double_encoding("plain ascii"), "plain ascii");
  EXPECT_EQ(fix_double_encoding(""), "");
}

TEST(DoubleEncoding, LeavesCleanTextAlone) {
  EXPECT_EQ(fix_double_encoding("caf\xC3\xA9"), "caf\xC3\xA9");
  EXPECT_EQ(fix_double_encoding("r\xC3\xA9gime \xE2\x82\xAC"), "r\xC3\xA9gime \xE2\x82\xAC");
  EXPECT_EQ(fix_double_encoding("\xC3\xA9t\xC3\xA9"), "\xC3\xA9t\xC3\xA9");
}

TEST(DoubleEncoding, RepairsRandomStrings) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto s = testing::random_unicode(rng, testing::uniform(rng, 1, 30));
    const auto fixed = fix_double_encoding(testing::latin1_misdecode(s));
    ASSERT_EQ(fixed, s);
    EXPECT_EQ(fix_double_encoding(fixed), fixed);
  }
}

TEST(DoubleEncoding, IdentityOnAscii) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    std::string s(testing::uniform(rng, 0, 50), ' ');
    for (auto& c : s) c = static_cast<char>(testing::uniform(rng, 0, 127));
    ASSERT_EQ(fix_double_encoding(s), s);
  }
}

}  // namespace
}  // namespace irds
