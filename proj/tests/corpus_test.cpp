#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dyadcode/corpus.hpp"
#include "dyadcode/lexicon.hpp"
#include "oracles.hpp"

using namespace dyadcode;

namespace {

Sequence seq(std::string couple, Partner p, int idx, std::string text, Code code) {
  return Sequence{std::move(couple), p, idx, std::move(text), code};
}

std::string with_header(const std::string& body) { return "dyadcorpus/1\n" + body; }

}  // namespace

TEST(Code, SerializesAsOneAndTwo) {
  EXPECT_EQ(to_int(Code::Positive), 1);
  EXPECT_EQ(to_int(Code::Negative), 2);
  EXPECT_EQ(code_from_int(1), Code::Positive);
  EXPECT_EQ(code_from_int(2), Code::Negative);
  EXPECT_THROW(code_from_int(0), DataError);
  EXPECT_THROW(code_from_int(3), DataError);
}

TEST(ParseCorpus, SingleRecord) {
  const auto c = parse_corpus(with_header("c1\tA\t0\t1\t\"ja gut\"\n"));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].id(), "c1/A/0");
  EXPECT_EQ(c[0].transcript, "ja gut");
  EXPECT_EQ(c[0].code, Code::Positive);
}

TEST(ParseCorpus, DuplicateIdIsAnError) {
  EXPECT_THROW(parse_corpus(with_header("c1\tA\t0\t1\t\"ja\"\nc1\tA\t0\t2\t\"nein\"\n")), DataError);
}

TEST(ParseCorpus, EmptyFileGivesEmptyCorpus) {
  for (const char* text : {"", "dyadcorpus/1\n"}) {
    const auto c = parse_corpus(text);
    EXPECT_TRUE(c.empty());
    const auto st = corpus_stats(c);
    EXPECT_EQ(st.n_total, 0u);
    EXPECT_EQ(st.n_positive, 0u);
    EXPECT_EQ(st.n_negative, 0u);
    EXPECT_EQ(st.n_couples, 0u);
  }
}

TEST(ParseCorpus, MalformedRecordsReportLine) {
  const std::pair<const char*, std::size_t> cases[] = {
      {"c1\tA\t0\t1\t\"ok\"\nc1\tC\t1\t1\t\"bad partner\"\n", 3},
      {"c1\tA\t0\t3\t\"neutral code\"\n", 2},
      {"c1\tA\tx\t1\t\"bad index\"\n", 2},
      {"c1\tA\t-1\t1\t\"negative index\"\n", 2},
      {"c1\tA\t0\t1\tunquoted\n", 2},
      {"c1\tA\t0\t1\n", 2},
      {"c1\tA\t0\t1\t\"unterminated\n", 2},
  };
  for (const auto& [body, line] : cases) {
    try {
      parse_corpus(with_header(body));
      ADD_FAILURE() << "accepted: " << body;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << body;
    }
  }
  EXPECT_THROW(parse_corpus("dyadcorpus/9\n"), ParseError);
}

TEST(ParseCorpus, EscapesAndMetadata) {
  const auto c = parse_corpus(with_header(
      "@meta\tpartner_channels\tA:0,B:1\n"
      "c2\tB\t3\t2\t\"sag \\\"nein\\\"\\tjetzt\\n\\u00e4\"\n"));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].transcript, "sag \"nein\"\tjetzt\nä");
  EXPECT_EQ(c.metadata().at("partner_channels"), "A:0,B:1");
}

TEST(Corpus, IterationIsSortedByKey) {
  const Corpus c({seq("c2", Partner::A, 0, "x", Code::Positive), seq("c1", Partner::B, 10, "x", Code::Positive),
                  seq("c1", Partner::B, 2, "x", Code::Negative), seq("c1", Partner::A, 5, "x", Code::Positive)});
  std::vector<std::string> ids;
  for (const auto& s : c) ids.push_back(s.id());
  EXPECT_EQ(ids, (std::vector<std::string>{"c1/A/5", "c1/B/2", "c1/B/10", "c2/A/0"}));
}

TEST(Corpus, RejectsBadCoupleIds) {
  EXPECT_THROW(Corpus({seq("a/b", Partner::A, 0, "x", Code::Positive)}), DataError);
  EXPECT_THROW(Corpus({seq("", Partner::A, 0, "x", Code::Positive)}), DataError);
  EXPECT_THROW(Corpus({seq("a b", Partner::A, 0, "x", Code::Positive)}), DataError);
}

TEST(DropEmpty, WhitespaceOnlyIsDropped) {
  const Corpus c({seq("c1", Partner::A, 0, "ja gut", Code::Positive), seq("c1", Partner::A, 1, "   ", Code::Positive)});
  EXPECT_EQ(drop_empty(c).size(), 1u);
}

TEST(DropEmpty, IdentityWithoutEmptyTranscripts) {
  const Corpus c({seq("c1", Partner::A, 0, "ja", Code::Positive), seq("c2", Partner::B, 0, "nein", Code::Negative)});
  EXPECT_EQ(drop_empty(c), c);
}

TEST(DropEmpty, PunctuationOnlyIsDropped) {
  const Corpus c({seq("c1", Partner::A, 0, "...", Code::Positive)});
  EXPECT_TRUE(drop_empty(c).empty());
}

TEST(DropEmpty, IdempotentAndShrinking) {
  SynthOptions opt;
  opt.silence_rate = 0.2;
  const auto c = generate_synthetic(10, 6, default_planted_lexicon(), 0.1, 3, opt);
  const auto once = drop_empty(c);
  EXPECT_EQ(drop_empty(once), once);
  EXPECT_LT(corpus_stats(once).n_total, corpus_stats(c).n_total);
  for (const auto& s : once) EXPECT_TRUE(has_speech(s));
}

TEST(CorpusStats, DirectCount) {
  const Corpus c({seq("c1", Partner::A, 0, "a", Code::Positive), seq("c1", Partner::B, 0, "b", Code::Positive),
                  seq("c2", Partner::A, 0, "c", Code::Negative)});
  const auto st = corpus_stats(c);
  EXPECT_EQ(st.n_total, 3u);
  EXPECT_EQ(st.n_positive, 2u);
  EXPECT_EQ(st.n_negative, 1u);
  EXPECT_EQ(st.n_couples, 2u);
}

TEST(CorpusIo, SerializeRoundTrip) {
  SynthOptions opt;
  opt.silence_rate = 0.1;
  const auto c = generate_synthetic(7, 5, default_planted_lexicon(), 0.2, 11, opt);
  const auto text = serialize_corpus(c);
  const auto back = parse_corpus(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_corpus(back), text);

  const Corpus odd({seq("c\xC3\xA4", Partner::B, 47, "\"quoted\"\\ tab\t line\nbreak \x01 ümlaut", Code::Negative)});
  EXPECT_EQ(parse_corpus(serialize_corpus(odd)), odd);
}

TEST(CorpusIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "dyadcode_corpus_test.txt";
  const auto c = generate_synthetic(3, 4, default_planted_lexicon(), 0.0, 5);
  save_corpus(c, path);
  EXPECT_EQ(load_corpus(path), c);
  std::filesystem::remove(path);
  EXPECT_THROW(load_corpus(path), DataError);
}

TEST(Synthetic, DeterministicGivenSeed) {
  const auto lex = default_planted_lexicon();
  const auto a = serialize_corpus(generate_synthetic(20, 12, lex, 0.05, 42));
  const auto b = serialize_corpus(generate_synthetic(20, 12, lex, 0.05, 42));
  const auto c = serialize_corpus(generate_synthetic(20, 12, lex, 0.05, 43));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Synthetic, SizeIsCouplesTimesTwoTimesSeqs) {
  const auto c = generate_synthetic(200, 12, default_planted_lexicon(), 0.05, 1);
  const auto st = corpus_stats(c);
  EXPECT_EQ(st.n_total, 4800u);
  EXPECT_EQ(st.n_couples, 200u);
  // about 70/30 after 5% flips: 0.7*0.95 + 0.3*0.05 = 0.68
  EXPECT_NEAR(static_cast<double>(st.n_positive) / 4800.0, 0.68, 0.03);
}

TEST(Synthetic, RejectsInvalidArguments) {
  const auto lex = default_planted_lexicon();
  EXPECT_THROW(generate_synthetic(0, 12, lex, 0.05, 1), DataError);
  EXPECT_THROW(generate_synthetic(5, 12, lex, -0.1, 1), DataError);
  EXPECT_THROW(generate_synthetic(5, 12, lex, 0.51, 1), DataError);
  SynthOptions opt;
  opt.positive_fraction = 1.5;
  EXPECT_THROW(generate_synthetic(5, 12, lex, 0.05, 1, opt), DataError);
  EXPECT_THROW(generate_synthetic(5, 12, parse_lexicon("%\n1 a\n%\ngut 1\n"), 0.05, 1), DataError);
}

TEST(Synthetic, PlantedWordsMatchTheirCategories) {
  const auto lex = default_planted_lexicon();
  const auto vocab = synth_vocabulary(lex, 1, 2);
  ASSERT_FALSE(vocab.positive.empty());
  ASSERT_FALSE(vocab.negative.empty());
  for (const auto& w : vocab.positive) {
    const auto* e = lex.match(w);
    ASSERT_NE(e, nullptr) << w;
    EXPECT_TRUE(std::count(e->category_ids.begin(), e->category_ids.end(), 1)) << w;
    EXPECT_FALSE(std::count(e->category_ids.begin(), e->category_ids.end(), 2)) << w;
  }
  for (const auto& w : vocab.filler) EXPECT_EQ(lex.match(w), nullptr) << w;
}

namespace {

// Planted-word balance of a transcript: posemo-only hits minus negemo-only hits.
long planted_difference(const std::string& text, const Lexicon& lex) {
  long d = 0;
  for (const auto& tok : tokenize(text)) {
    const auto* e = lex.match(tok);
    if (!e) continue;
    const bool p = std::count(e->category_ids.begin(), e->category_ids.end(), 1) > 0;
    const bool n = std::count(e->category_ids.begin(), e->category_ids.end(), 2) > 0;
    d += static_cast<long>(p && !n) - static_cast<long>(n && !p);
  }
  return d;
}

// Balanced accuracy of "Positive iff planted_difference >= 1".
double threshold_rule_accuracy(const Corpus& c, const Lexicon& lex) {
  double counts[2][2] = {};
  for (const auto& s : c) ++counts[s.code == Code::Positive ? 0 : 1][planted_difference(s.transcript, lex) >= 1 ? 0 : 1];
  return 0.5 * (counts[0][0] / (counts[0][0] + counts[0][1]) + counts[1][1] / (counts[1][0] + counts[1][1]));
}

}  // namespace

// The generator's best achievable balanced accuracy, computed exactly from
// its sampling law, leaves room above the end-to-end threshold of 0.85; the
// empirical rate of the optimal rule on a generated corpus agrees with it.
TEST(Synthetic, BayesRateLeavesMarginAboveThreshold) {
  const SynthOptions opt;
  const double bayes = oracle::synthetic_bayes_balanced_accuracy(opt.signal_rate, opt.cross_rate,
                                                                 opt.positive_fraction, 0.05, opt.min_tokens,
                                                                 opt.max_tokens);
  EXPECT_GT(bayes, 0.90);
  const auto lex = default_planted_lexicon();
  EXPECT_NEAR(threshold_rule_accuracy(generate_synthetic(400, 12, lex, 0.05, 99, opt), lex), bayes, 0.02);
}

TEST(Synthetic, HalfNoiseDestroysSignal) {
  const auto lex = default_planted_lexicon();
  EXPECT_NEAR(threshold_rule_accuracy(generate_synthetic(400, 12, lex, 0.5, 7), lex), 0.5, 0.03);
}

TEST(PermuteLabels, KeepsTextsAndLabelMultiset) {
  const auto c = generate_synthetic(10, 6, default_planted_lexicon(), 0.05, 8);
  const auto p = permute_labels(c, 1);
  ASSERT_EQ(p.size(), c.size());
  EXPECT_EQ(corpus_stats(p).n_positive, corpus_stats(c).n_positive);
  bool changed = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(p[i].transcript, c[i].transcript);
    changed |= p[i].code != c[i].code;
  }
  EXPECT_TRUE(changed);
}
