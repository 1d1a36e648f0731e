#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyadcode/error.hpp"
#include "dyadcode/lexicon.hpp"
#include "dyadcode/rng.hpp"
#include "dyadcode/tokenizer.hpp"

namespace dyadcode {

// Binary communication code; serialized as 1 (positive) and 2 (negative).
enum class Code : int { Positive = 1, Negative = 2 };

inline Code code_from_int(int value) {
  if (value == 1) return Code::Positive;
  if (value == 2) return Code::Negative;
  throw DataError("unknown code value " + std::to_string(value) + " (expected 1 or 2)");
}

constexpr int to_int(Code c) noexcept { return static_cast<int>(c); }
constexpr Code flip(Code c) noexcept { return c == Code::Positive ? Code::Negative : Code::Positive; }

enum class Partner : char { A = 'A', B = 'B' };

inline Partner partner_from_string(std::string_view s) {
  if (s == "A") return Partner::A;
  if (s == "B") return Partner::B;
  throw DataError("unknown partner '" + std::string(s) + "' (expected A or B)");
}

constexpr char to_char(Partner p) noexcept { return static_cast<char>(p); }

// One coded 10-second unit of one partner's speech.
struct Sequence {
  std::string couple_id;
  Partner partner = Partner::A;
  int seq_index = 0;
  std::string transcript;
  Code code = Code::Positive;

  // Canonical "couple_id/partner/seq_index".
  std::string id() const { return couple_id + '/' + to_char(partner) + '/' + std::to_string(seq_index); }

  auto key() const { return std::tie(couple_id, partner, seq_index); }

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

inline void validate_couple_id(std::string_view id) {
  if (id.empty()) throw DataError("empty couple id");
  if (id.find_first_of("/ \t\r\n") != std::string_view::npos)
    throw DataError("couple id '" + std::string(id) + "' contains '/' or whitespace");
  if (id.front() == '#' || id.front() == '@')
    throw DataError("couple id '" + std::string(id) + "' starts with a reserved character");
}

// Immutable, id-sorted collection of sequences.
class Corpus {
 public:
  using Metadata = std::map<std::string, std::string>;

  Corpus() = default;

  explicit Corpus(std::vector<Sequence> sequences, Metadata metadata = {})
      : sequences_(std::move(sequences)), metadata_(std::move(metadata)) {
    for (const auto& s : sequences_) {
      validate_couple_id(s.couple_id);
      if (s.seq_index < 0) throw DataError("negative seq_index in " + s.id());
    }
    std::sort(sequences_.begin(), sequences_.end(),
              [](const Sequence& a, const Sequence& b) { return a.key() < b.key(); });
    for (std::size_t i = 1; i < sequences_.size(); ++i) {
      if (sequences_[i - 1].key() == sequences_[i].key())
        throw DataError("duplicate sequence id " + sequences_[i].id());
    }
  }

  const std::vector<Sequence>& sequences() const noexcept { return sequences_; }
  const Metadata& metadata() const noexcept { return metadata_; }
  std::size_t size() const noexcept { return sequences_.size(); }
  bool empty() const noexcept { return sequences_.empty(); }
  const Sequence& operator[](std::size_t i) const { return sequences_[i]; }

  auto begin() const noexcept { return sequences_.begin(); }
  auto end() const noexcept { return sequences_.end(); }

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::vector<Sequence> sequences_;
  Metadata metadata_;
};

struct CorpusStats {
  std::size_t n_total = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t n_couples = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

inline CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  std::set<std::string_view> couples;
  for (const auto& s : corpus) {
    ++stats.n_total;
    (s.code == Code::Positive ? stats.n_positive : stats.n_negative)++;
    couples.insert(s.couple_id);
  }
  stats.n_couples = couples.size();
  return stats;
}

inline bool has_speech(const Sequence& s) { return !tokenize(s.transcript).empty(); }

// Keeps the sequences whose transcript yields at least one token.
inline Corpus drop_empty(const Corpus& corpus) {
  std::vector<Sequence> kept;
  kept.reserve(corpus.size());
  for (const auto& s : corpus) {
    if (has_speech(s)) kept.push_back(s);
  }
  return Corpus(std::move(kept), corpus.metadata());
}

// Reassigns the codes by a seeded permutation; a label-shuffled control.
inline Corpus permute_labels(const Corpus& corpus, std::uint64_t seed) {
  std::vector<Code> codes;
  codes.reserve(corpus.size());
  for (const auto& s : corpus) codes.push_back(s.code);
  Rng rng(seed);
  rng.shuffle(std::span<Code>(codes));
  std::vector<Sequence> out(corpus.begin(), corpus.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].code = codes[i];
  auto meta = corpus.metadata();
  meta["labels_permuted_seed"] = std::to_string(seed);
  return Corpus(std::move(out), std::move(meta));
}

// ---------------------------------------------------------------------------
// dyadcorpus/1 line format
//
//   dyadcorpus/1
//   @meta<TAB>key<TAB>value
//   couple_id<TAB>partner<TAB>seq_index<TAB>code<TAB>"json-escaped transcript"
//
// Blank lines and lines starting with '#' are ignored.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCorpusFormat = "dyadcorpus/1";

inline Corpus parse_corpus(std::string_view text) {
  std::vector<Sequence> sequences;
  Corpus::Metadata metadata;
  std::map<std::tuple<std::string, Partner, int>, std::size_t> seen;

  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty() || line.front() == '#') continue;

    if (!header_seen) {
      if (detail::trim(line) != kCorpusFormat)
        throw ParseError("expected header '" + std::string(kCorpusFormat) + "'", line_no);
      header_seen = true;
      continue;
    }

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (int k = 0; k < 4; ++k) {
      const auto tab = line.find('\t', start);
      if (tab == std::string_view::npos) break;
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    fields.push_back(line.substr(start));

    if (fields[0] == "@meta") {
      if (fields.size() != 3) throw ParseError("metadata line needs a key and a value", line_no);
      metadata[std::string(fields[1])] = std::string(fields[2]);
      continue;
    }
    if (fields.size() != 5) throw ParseError("expected 5 tab-separated fields", line_no);

    Sequence s;
    try {
      validate_couple_id(fields[0]);
      s.couple_id = std::string(fields[0]);
      s.partner = partner_from_string(fields[1]);
      int value = 0;
      auto [p1, e1] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), s.seq_index);
      if (e1 != std::errc{} || p1 != fields[2].data() + fields[2].size() || s.seq_index < 0)
        throw DataError("malformed seq_index '" + std::string(fields[2]) + "'");
      auto [p2, e2] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), value);
      if (e2 != std::errc{} || p2 != fields[3].data() + fields[3].size())
        throw DataError("malformed code '" + std::string(fields[3]) + "'");
      s.code = code_from_int(value);
      const auto parsed = nlohmann::json::parse(fields[4]);
      if (!parsed.is_string()) throw DataError("transcript must be a JSON string literal");
      s.transcript = parsed.get<std::string>();
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad transcript literal: ") + e.what(), line_no);
    }
    auto [it, inserted] = seen.emplace(std::tuple(s.couple_id, s.partner, s.seq_index), line_no);
    if (!inserted)
      throw ParseError("duplicate sequence id " + s.id() + " (first on line " + std::to_string(it->second) + ")",
                       line_no);
    sequences.push_back(std::move(s));
  }
  if (!header_seen && !sequences.empty()) throw ParseError("missing header");
  return Corpus(std::move(sequences), std::move(metadata));
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  out << kCorpusFormat << '\n';
  for (const auto& [key, value] : corpus.metadata()) out << "@meta\t" << key << '\t' << value << '\n';
  for (const auto& s : corpus) {
    out << s.couple_id << '\t' << to_char(s.partner) << '\t' << s.seq_index << '\t' << to_int(s.code) << '\t'
        << nlohmann::json(s.transcript).dump() << '\n';
  }
  return out.str();
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  out << serialize_corpus(corpus);
}

// ---------------------------------------------------------------------------
// Synthetic corpora with a planted lexicon signal
// ---------------------------------------------------------------------------

struct SynthOptions {
  double positive_fraction = 0.7;
  // Per-token source probabilities; the remainder is filler that matches no entry.
  double signal_rate = 0.40;      // the true label's planted category
  double cross_rate = 0.02;       // the opposite planted category
  double background_rate = 0.15;  // any other category
  int min_tokens = 5;
  int max_tokens = 15;
  double silence_rate = 0.0;  // fraction of sequences with an empty transcript
  std::optional<int> positive_category;  // default: lowest category id
  std::optional<int> negative_category;  // default: second-lowest category id
};

// Word pools realized from a lexicon, each word verified to match back to
// an entry of the intended kind.
struct SynthVocabulary {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  std::vector<std::string> background;
  std::vector<std::string> filler;
};

inline SynthVocabulary synth_vocabulary(const Lexicon& lexicon, int positive_category, int negative_category) {
  static constexpr std::string_view kSuffixes[] = {"", "e", "en", "er", "t", "st"};
  SynthVocabulary vocab;
  std::set<std::string> used;
  for (const auto& entry : lexicon.entries()) {
    std::vector<std::string> words;
    if (entry.is_prefix) {
      for (auto suffix : kSuffixes) words.push_back(entry.pattern + std::string(suffix));
    } else {
      words.push_back(entry.pattern);
    }
    for (auto& w : words) {
      const auto toks = tokenize(w);
      if (toks.size() != 1 || toks.front() != w || lexicon.match(w) != &entry || !used.insert(w).second) continue;
      const auto& ids = entry.category_ids;
      const bool pos = std::binary_search(ids.begin(), ids.end(), positive_category);
      const bool neg = std::binary_search(ids.begin(), ids.end(), negative_category);
      if (pos && !neg) {
        vocab.positive.push_back(w);
      } else if (neg && !pos) {
        vocab.negative.push_back(w);
      } else if (!pos && !neg) {
        vocab.background.push_back(w);
      }
    }
  }
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "m", "n", "p", "r", "s", "t", "w", "z"};
  static constexpr std::string_view kNuclei[] = {"a", "o", "u", "ei", "au"};
  for (auto a : kOnsets) {
    for (auto b : kNuclei) {
      for (auto c : kOnsets) {
        std::string w = std::string(a) + std::string(b) + std::string(c) + "o";
        if (lexicon.match(w) == nullptr && !used.contains(w)) vocab.filler.push_back(std::move(w));
        if (vocab.filler.size() >= 200) return vocab;
      }
    }
  }
  return vocab;
}

inline std::pair<int, int> planted_categories(const Lexicon& lexicon, const SynthOptions& options) {
  if (lexicon.category_count() < 2) throw DataError("planted lexicon needs at least two categories");
  auto it = lexicon.categories().begin();
  const int first = it->first;
  const int second = (++it)->first;
  const int pos = options.positive_category.value_or(first);
  const int neg = options.negative_category.value_or(second);
  if (!lexicon.categories().contains(pos) || !lexicon.categories().contains(neg) || pos == neg)
    throw DataError("planted categories must be two distinct declared categories");
  return {pos, neg};
}

// Deterministic synthetic corpus: positive-labelled transcripts draw words
// mostly from one planted category, negative ones from another, and each
// label is then flipped with probability label_noise.
inline Corpus generate_synthetic(int n_couples, int seqs_per_partner, const Lexicon& planted_lexicon,
                                 double label_noise, std::uint64_t seed, const SynthOptions& options = {}) {
  if (n_couples < 1) throw DataError("n_couples must be >= 1");
  if (seqs_per_partner < 1) throw DataError("seqs_per_partner must be >= 1");
  if (!(label_noise >= 0.0 && label_noise <= 0.5)) throw DataError("label_noise must lie in [0, 0.5]");
  const auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(options.positive_fraction) || !in_unit(options.silence_rate) || !in_unit(options.signal_rate) ||
      !in_unit(options.cross_rate) || !in_unit(options.background_rate) ||
      options.signal_rate + options.cross_rate + options.background_rate > 1.0)
    throw DataError("invalid synthetic probability");
  if (options.min_tokens < 1 || options.max_tokens < options.min_tokens) throw DataError("invalid token range");

  const auto [pos_cat, neg_cat] = planted_categories(planted_lexicon, options);
  const auto vocab = synth_vocabulary(planted_lexicon, pos_cat, neg_cat);
  if (vocab.positive.empty() || vocab.negative.empty())
    throw DataError("planted categories have no realizable words");
  if (vocab.filler.empty()) throw DataError("no filler words available");
  const auto& background = vocab.background.empty() ? vocab.filler : vocab.background;

  Rng rng(seed);
  const auto pick = [&rng](const std::vector<std::string>& pool) -> const std::string& {
    return pool[rng.below(pool.size())];
  };
  const int width = std::max<int>(3, static_cast<int>(std::to_string(n_couples).size()));

  std::vector<Sequence> sequences;
  sequences.reserve(static_cast<std::size_t>(n_couples) * 2 * seqs_per_partner);
  for (int c = 0; c < n_couples; ++c) {
    std::string couple = std::to_string(c + 1);
    couple = "c" + std::string(width - couple.size(), '0') + couple;
    for (Partner partner : {Partner::A, Partner::B}) {
      for (int k = 0; k < seqs_per_partner; ++k) {
        Sequence s;
        s.couple_id = couple;
        s.partner = partner;
        s.seq_index = k;
        const Code truth = rng.bernoulli(options.positive_fraction) ? Code::Positive : Code::Negative;
        const bool silent = rng.bernoulli(options.silence_rate);
        const auto& own = truth == Code::Positive ? vocab.positive : vocab.negative;
        const auto& other = truth == Code::Positive ? vocab.negative : vocab.positive;
        const auto n_tokens = rng.between(options.min_tokens, options.max_tokens);
        if (!silent) {
          for (std::int64_t t = 0; t < n_tokens; ++t) {
            const double u = rng.uniform();
            const std::string* word;
            if (u < options.signal_rate) {
              word = &pick(own);
            } else if (u < options.signal_rate + options.cross_rate) {
              word = &pick(other);
            } else if (u < options.signal_rate + options.cross_rate + options.background_rate) {
              word = &pick(background);
            } else {
              word = &pick(vocab.filler);
            }
            if (t > 0) s.transcript += ' ';
            s.transcript += *word;
          }
          s.transcript += '.';
        }
        s.code = rng.bernoulli(label_noise) ? flip(truth) : truth;
        sequences.push_back(std::move(s));
      }
    }
  }

  auto fmt = [](double v) {
    std::ostringstream o;
    o << v;
    return o.str();
  };
  Corpus::Metadata meta{
      {"generator", "synthetic"},
      {"seed", std::to_string(seed)},
      {"label_noise", fmt(label_noise)},
      {"positive_fraction", fmt(options.positive_fraction)},
      {"planted_categories", std::to_string(pos_cat) + "," + std::to_string(neg_cat)},
      {"partner_channels", "A:0,B:1"},
  };
  return Corpus(std::move(sequences), std::move(meta));
}

// A small German-flavoured lexicon for synthetic corpora and demos. The first
// two categories carry the planted signal.
inline Lexicon default_planted_lexicon() {
  return parse_lexicon(
      "%\n"
      "1\tposemo\n"
      "2\tnegemo\n"
      "3\tpronoun\n"
      "4\tsocial\n"
      "5\tcogproc\n"
      "6\tnegate\n"
      "%\n"
      "lieb*\t1\n" "gut\t1\n" "schön*\t1\n" "danke\t1\n" "freu*\t1\n" "toll\t1\n" "super\t1\n"
      "verstehe\t1 5\n" "gerne\t1\n" "lach*\t1\n" "zusammen\t1 4\n" "hilf*\t1 4\n"
      "schlecht*\t2\n" "nerv*\t2\n" "immer\t2\n" "schuld*\t2\n" "ärger*\t2\n" "blöd*\t2\n"
      "hass*\t2\n" "falsch\t2\n" "stör*\t2\n" "wütend\t2\n" "vorwurf*\t2 4\n" "nie\t2 6\n"
      "ich\t3\n" "du\t3\n" "wir\t3 4\n" "mich\t3\n" "dich\t3\n" "uns\t3 4\n"
      "freund*\t4\n" "familie\t4\n" "reden\t4\n" "sagen\t4\n"
      "denk*\t5\n" "weil\t5\n" "vielleicht\t5\n" "wissen\t5\n"
      "nicht\t6\n" "kein*\t6\n" "nichts\t6\n");
}

}  // namespace dyadcode
