#include <gtest/gtest.h>

#include "dyadcode/tokenizer.hpp"

using dyadcode::tokenize;
using Tokens = std::vector<std::string>;

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Ich liebe dich!"), (Tokens{"ich", "liebe", "dich"}));
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, KeepsEmbeddedApostropheAndHyphenDropsDigits) {
  EXPECT_EQ(tokenize("geht's gut-so 123"), (Tokens{"geht's", "gut-so"}));
}

TEST(Tokenize, GermanLettersAreWordCharacters) {
  EXPECT_EQ(tokenize("Schöne Grüße, Straße!"), (Tokens{"schöne", "grüße", "straße"}));
  EXPECT_EQ(tokenize("ÄRGER Übel"), (Tokens{"ärger", "übel"}));
}

TEST(Tokenize, JoinersOnlyBetweenLetters) {
  EXPECT_EQ(tokenize("'hallo' -ja- a--b"), (Tokens{"hallo", "ja", "a", "b"}));
  EXPECT_EQ(tokenize("geht’s"), (Tokens{"geht's"}));
}

TEST(Tokenize, PunctuationAndWhitespaceOnly) {
  EXPECT_TRUE(tokenize("...").empty());
  EXPECT_TRUE(tokenize("   \t\n").empty());
  EXPECT_TRUE(tokenize("42 - 7 = 35 !?").empty());
}

TEST(Tokenize, DigitsSeparateLetters) { EXPECT_EQ(tokenize("abc1def"), (Tokens{"abc", "def"})); }

TEST(Tokenize, InvalidUtf8DoesNotCrash) {
  const std::string bad = "ok\xC3 \xFF\xFEja \xE2\x82";
  const auto t = tokenize(bad);
  ASSERT_GE(t.size(), 2u);
  EXPECT_EQ(t.front(), "ok");
}
