// dyadcode command line: featurize, run, compare, synth.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 data error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dyadcode/dyadcode.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

int cmd_featurize(const std::string& corpus_path, const std::string& lexicon_path, const std::string& out_path) {
  const auto corpus = dyadcode::drop_empty(dyadcode::load_corpus(corpus_path));
  const auto lexicon = dyadcode::load_lexicon(lexicon_path);
  dyadcode::VectorTable table;
  table.dim = lexicon.category_count();
  table.source_label = "lexicon";
  if (table.dim == 0) throw dyadcode::DataError("lexicon declares no categories");
  for (const auto& s : corpus) table.insert(s.id(), dyadcode::featurize(s.transcript, lexicon).values);
  dyadcode::save_vector_table(table, out_path);
  std::cout << "wrote " << table.rows.size() << " rows, dim=" << table.dim << " to " << out_path << '\n';
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::optional<std::size_t> threads) {
  auto config = dyadcode::load_config(config_path);
  if (threads) config.threads = *threads;
  const auto table = dyadcode::run_experiment(config);
  dyadcode::write_results(table, out_dir);
  std::cout << dyadcode::format_results_table(table);
  return 0;
}

const dyadcode::ResultsRow& pick_row(const dyadcode::ResultsTable& table, const std::string& name,
                                     const std::string& dir) {
  if (!name.empty()) return table.find(name);
  if (table.rows.size() != 1)
    throw dyadcode::ConfigError(dir + " holds " + std::to_string(table.rows.size()) +
                                " feature sets; pick one with --set-a/--set-b");
  return table.rows.front();
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, const std::string& set_a,
                const std::string& set_b) {
  const auto table_a = dyadcode::read_results(dir_a);
  const auto table_b = dyadcode::read_results(dir_b);
  const auto& a = pick_row(table_a, set_a, dir_a);
  const auto& b = pick_row(table_b, set_b, dir_b);
  std::cout << a.feature_set << " vs " << b.feature_set << " over " << a.runs.size() << " paired runs\n";
  try {
    const auto res = dyadcode::compare_models(a, b);
    std::printf("W = %g (W+ = %g, W- = %g), n = %zu\np = %.6g\nmethod = %s\n", res.statistic, res.w_plus, res.w_minus,
                res.n_effective, res.p_value, res.method == dyadcode::WilcoxonMethod::Exact ? "exact" : "normal-approx");
  } catch (const dyadcode::InsufficientDataError& e) {
    std::cout << "W = n/a\np = n/a\nmethod = n/a (" << e.what() << ")\n";
  }
  return 0;
}

int cmd_synth(int couples, int seqs, double noise, std::uint64_t seed, const std::string& out,
              const std::string& lexicon_path, const std::string& lexicon_out, double positive_fraction) {
  const auto lexicon =
      lexicon_path.empty() ? dyadcode::default_planted_lexicon() : dyadcode::load_lexicon(lexicon_path);
  dyadcode::SynthOptions options;
  options.positive_fraction = positive_fraction;
  const auto corpus = dyadcode::generate_synthetic(couples, seqs, lexicon, noise, seed, options);
  dyadcode::save_corpus(corpus, out);
  if (!lexicon_out.empty()) {
    std::ofstream dic(lexicon_out, std::ios::binary);
    dic << dyadcode::to_dic(lexicon);
  }
  const auto stats = dyadcode::corpus_stats(corpus);
  std::cout << "wrote " << stats.n_total << " sequences (" << stats.n_positive << " positive, " << stats.n_negative
            << " negative, " << stats.n_couples << " couples) to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication-code prediction from dyadic interaction transcripts"};
  app.require_subcommand(1);

  std::string corpus, lexicon, out, config, out_dir, dir_a, dir_b, set_a, set_b, lexicon_out;
  std::optional<std::size_t> threads;
  int couples = 0, seqs = 0;
  double noise = 0.0, positive_fraction = 0.7;
  std::uint64_t seed = 0;

  auto* featurize = app.add_subcommand("featurize", "Write lexicon features of a corpus as a vector table");
  featurize->add_option("--corpus", corpus, "Corpus file (dyadcorpus/1)")->required();
  featurize->add_option("--lexicon", lexicon, "DIC lexicon")->required();
  featurize->add_option("--out", out, "Output vector table (dyadvec/1)")->required();

  auto* run = app.add_subcommand("run", "Run the nested cross-validation experiment");
  run->add_option("--config", config, "Experiment config (dyadexp/1)")->required();
  run->add_option("--out-dir", out_dir, "Directory for CSV results and the table")->required();
  run->add_option("--threads", threads, "Worker threads (overrides the config)");

  auto* compare = app.add_subcommand("compare", "Paired Wilcoxon signed-rank test of two result sets");
  compare->add_option("--a", dir_a, "First results directory")->required();
  compare->add_option("--b", dir_b, "Second results directory")->required();
  compare->add_option("--set-a", set_a, "Feature set to use from --a");
  compare->add_option("--set-b", set_b, "Feature set to use from --b");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with a planted lexicon signal");
  synth->add_option("--couples", couples, "Number of couples")->required();
  synth->add_option("--seqs", seqs, "Sequences per partner")->required();
  synth->add_option("--noise", noise, "Label flip probability in [0, 0.5]")->required();
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->add_option("--out", out, "Output corpus file")->required();
  synth->add_option("--lexicon", lexicon, "Planted lexicon (default: built-in demo lexicon)");
  synth->add_option("--write-lexicon", lexicon_out, "Also write the planted lexicon as DIC");
  synth->add_option("--positive-fraction", positive_fraction, "Share of positive sequences before noise");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*featurize) return cmd_featurize(corpus, lexicon, out);
    if (*run) return cmd_run(config, out_dir, threads);
    if (*compare) return cmd_compare(dir_a, dir_b, set_a, set_b);
    if (*synth) return cmd_synth(couples, seqs, noise, seed, out, lexicon, lexicon_out, positive_fraction);
  } catch (const dyadcode::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dyadcode::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
