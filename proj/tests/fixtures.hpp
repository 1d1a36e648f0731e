// Small builders shared by the unit tests and the acceptance binary.
#pragma once

#include <string>
#include <vector>

#include "dyadcode/corpus.hpp"
#include "dyadcode/rng.hpp"
#include "dyadcode/vectors.hpp"

namespace fixtures {

// Gaussian-ish rows (sum of uniforms) for every sequence of the corpus.
inline dyadcode::VectorTable random_table(const dyadcode::Corpus& corpus, std::size_t dim, std::string label,
                                          std::uint64_t seed) {
  dyadcode::VectorTable t;
  t.dim = dim;
  t.source_label = std::move(label);
  dyadcode::Rng rng(seed);
  for (const auto& s : corpus) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.uniform() + rng.uniform() + rng.uniform() - 1.5;
    t.insert(s.id(), std::move(v));
  }
  return t;
}

// Random corpus: couples with uneven sequence counts, random labels.
inline dyadcode::Corpus random_corpus(dyadcode::Rng& rng, std::size_t n_couples, int max_per_partner) {
  std::vector<dyadcode::Sequence> seqs;
  for (std::size_t c = 0; c < n_couples; ++c) {
    for (auto p : {dyadcode::Partner::A, dyadcode::Partner::B}) {
      const auto n = rng.between(p == dyadcode::Partner::A ? 1 : 0, max_per_partner);
      for (std::int64_t k = 0; k < n; ++k) {
        seqs.push_back({"k" + std::to_string(c), p, static_cast<int>(k), "ja",
                        rng.bernoulli(0.6) ? dyadcode::Code::Positive : dyadcode::Code::Negative});
      }
    }
  }
  return dyadcode::Corpus(std::move(seqs));
}

}  // namespace fixtures
