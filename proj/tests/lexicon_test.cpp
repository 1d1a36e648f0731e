#include <gtest/gtest.h>

#include "dyadcode/lexicon.hpp"
#include "dyadcode/rng.hpp"
#include "dyadcode/corpus.hpp"
#include "oracles.hpp"

#include <set>

using namespace dyadcode;

namespace {

const char* kSmall = "%\n1 Pronoun\n2 Posemo\n%\nich 1\nlieb* 2\n";

}  // namespace

TEST(ParseLexicon, StandardLayout) {
  const auto lex = parse_lexicon(kSmall);
  ASSERT_EQ(lex.category_count(), 2u);
  EXPECT_EQ(lex.categories().at(1), "Pronoun");
  EXPECT_EQ(lex.categories().at(2), "Posemo");
  ASSERT_EQ(lex.entries().size(), 2u);
  EXPECT_EQ(lex.entries()[0].pattern, "ich");
  EXPECT_FALSE(lex.entries()[0].is_prefix);
  EXPECT_EQ(lex.entries()[1].pattern, "lieb");
  EXPECT_TRUE(lex.entries()[1].is_prefix);
  EXPECT_EQ(lex.entries()[1].category_ids, std::vector<int>{2});
}

TEST(ParseLexicon, UndeclaredCategoryIsAnError) {
  EXPECT_THROW(parse_lexicon("%\n1 a\n2 b\n%\ngut 7\n"), ParseError);
}

TEST(ParseLexicon, HeaderOnly) {
  const auto lex = parse_lexicon("%\n1 a\n2 b\n%\n");
  EXPECT_EQ(lex.category_count(), 2u);
  EXPECT_TRUE(lex.entries().empty());
}

TEST(ParseLexicon, Malformed) {
  EXPECT_THROW(parse_lexicon("1 a\nich 1\n"), ParseError);          // no '%'
  EXPECT_THROW(parse_lexicon("%\n1 a\nich 1\n"), ParseError);       // unclosed header
  EXPECT_THROW(parse_lexicon("%\n1 a\n%\nich x\n"), ParseError);    // bad id
  EXPECT_THROW(parse_lexicon("%\n1 a\n1 b\n%\n"), ParseError);      // duplicate id
  EXPECT_THROW(parse_lexicon("%\n1 a\n%\n* 1\n"), ParseError);      // empty prefix
  EXPECT_THROW(parse_lexicon("%\n1 a\n%\nli*b 1\n"), ParseError);   // inner '*'
  EXPECT_THROW(parse_lexicon("%\n1 a\n%\nich\n"), ParseError);      // no categories
}

TEST(ParseLexicon, ErrorsCarryLineNumbers) {
  try {
    parse_lexicon("%\n1 a\n%\nich 1\ndu 9\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
}

TEST(ParseLexicon, CommentsAndTabs) {
  const auto lex = parse_lexicon("# demo\n%\n1\tPronoun\n%\n# entries\nich\t1\n");
  EXPECT_EQ(lex.entries().size(), 1u);
}

TEST(ParseLexicon, DicRoundTrip) {
  const auto lex = default_planted_lexicon();
  EXPECT_EQ(parse_lexicon(to_dic(lex)), lex);
}

TEST(ParseLexicon, DuplicatePatternIsAnError) {
  EXPECT_THROW(parse_lexicon("%\n1 a\n2 b\n%\ngut 1\ngut 2\n"), ParseError);
  // the same stem as exact and as prefix is fine
  EXPECT_NO_THROW(parse_lexicon("%\n1 a\n2 b\n%\ngut 1\ngut* 2\n"));
}

TEST(Featurize, HandCountedExample) {
  const auto lex = parse_lexicon(kSmall);
  const auto f = featurize("ich liebe dich sehr", lex);
  EXPECT_EQ(f.word_count, 4u);
  EXPECT_EQ(f.values, (std::vector<double>{0.25, 0.25}));
}

TEST(Featurize, NoHitsGivesZeros) {
  const auto f = featurize("hallo welt", parse_lexicon(kSmall));
  EXPECT_EQ(f.values, (std::vector<double>{0.0, 0.0}));
}

TEST(Featurize, ExactBeatsPrefix) {
  const auto lex = parse_lexicon("%\n1 a\n2 b\n%\nlieb* 2\nliebe 1\n");
  EXPECT_EQ(featurize("liebe", lex).values, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(featurize("lieben", lex).values, (std::vector<double>{0.0, 1.0}));
}

TEST(Featurize, LongestPrefixWins) {
  const auto lex = parse_lexicon("%\n1 a\n2 b\n%\nli* 1\nlieb* 2\n");
  EXPECT_EQ(featurize("liebling", lex).values, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(featurize("licht", lex).values, (std::vector<double>{1.0, 0.0}));
}

TEST(Featurize, MultiCategoryEntryCountsOncePerCategory) {
  const auto lex = parse_lexicon("%\n1 a\n2 b\n%\nwir 1 2 2\n");
  EXPECT_EQ(featurize("wir gehen", lex).values, (std::vector<double>{0.5, 0.5}));
}

TEST(Featurize, UppercaseEntriesMatchLowercasedTokens) {
  const auto lex = parse_lexicon("%\n1 a\n%\nÄrger* 1\n");
  EXPECT_EQ(featurize("ÄRGERLICH", lex).values, (std::vector<double>{1.0}));
}

TEST(Featurize, EmptyTextIsAnError) {
  EXPECT_THROW(featurize("  ...  ", parse_lexicon(kSmall)), DataError);
}

TEST(Featurize, RepetitionInvariance) {
  const auto lex = default_planted_lexicon();
  const std::string text = "ich liebe dich, aber du nervst immer. Nicht schlecht!";
  const auto base = featurize(text, lex).values;
  std::string rep = text;
  for (int k = 2; k <= 6; ++k) {
    rep += " " + text;
    const auto f = featurize(rep, lex).values;
    for (std::size_t c = 0; c < base.size(); ++c) EXPECT_NEAR(f[c], base[c], 1e-15) << "k=" << k;
  }
}

// Random lexica over a tiny alphabet so that prefixes overlap often.
TEST(Featurize, AgreesWithBruteForceScan) {
  Rng rng(20240611);
  const auto word = [&](int min_len, int max_len) {
    std::string w;
    const auto len = rng.between(min_len, max_len);
    for (std::int64_t i = 0; i < len; ++i) w += "abcä"[rng.below(3)];
    if (rng.bernoulli(0.1)) w += "ä";
    return w;
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::map<int, std::string> cats;
    const auto n_cats = rng.between(1, 5);
    for (int c = 1; c <= n_cats; ++c) cats.emplace(c * 3, "c" + std::to_string(c));
    std::vector<LexiconEntry> entries;
    std::set<std::pair<std::string, bool>> seen;
    const auto n_entries = rng.between(0, 12);
    for (std::int64_t e = 0; e < n_entries; ++e) {
      LexiconEntry entry;
      entry.pattern = word(1, 4);
      entry.is_prefix = rng.bernoulli(0.5);
      if (!seen.emplace(entry.pattern, entry.is_prefix).second) continue;
      const auto k = rng.between(1, 2);
      for (std::int64_t j = 0; j < k; ++j) entry.category_ids.push_back(3 * static_cast<int>(rng.between(1, n_cats)));
      entries.push_back(entry);
    }
    const Lexicon lex(cats, entries);
    std::string text;
    const auto n_words = rng.between(1, 15);
    for (std::int64_t w = 0; w < n_words; ++w) text += word(1, 6) + (rng.bernoulli(0.2) ? ", " : " ");
    const auto got = featurize(text, lex).values;
    const auto want = oracle::lexicon_features(text, lex);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t c = 0; c < got.size(); ++c) {
      EXPECT_DOUBLE_EQ(got[c], want[c]) << "trial " << trial << " text '" << text << "'";
      EXPECT_GE(got[c], 0.0);
      EXPECT_LE(got[c], 1.0);
    }
  }
}
