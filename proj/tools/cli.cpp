// Copyright 2026 The rtgae Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "rtgae/datasets.hpp"
#include "rtgae/decoder.hpp"
#include "rtgae/eval.hpp"
#include "rtgae/latentopt.hpp"
#include "rtgae/parallel.hpp"
#include "rtgae/training.hpp"
#include "rtgae/vae.hpp"

namespace rtgae::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A grammar argument is a file, a built-in id, or a built-in id with .rtg.
RegularTreeGrammar load_grammar(const std::string& spec) {
  const fs::path p(spec);
  if (fs::is_regular_file(p)) {
    try {
      return RegularTreeGrammar::from_text(read_file(p));
    } catch (const SyntaxError& e) {
      throw SyntaxError(spec + ": " + e.what(), e.line(), e.column());
    }
  }
  const auto ids = builtin_grammar_ids();
  for (const std::string& id : {spec, p.extension() == ".rtg" ? p.stem().string() : spec})
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) return builtin_grammar(id);
  throw GrammarError("no grammar file or built-in grammar named '" + spec + "'");
}

// Appends key=value lines from --config as --key=value unless the flag was
// given on the command line, so flags win over the file.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--") break;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw std::runtime_error("cannot read config file " + *path);
  auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(*path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") continue;
    if (!given(key)) extra.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  auto sep = std::find(args.begin(), args.end(), std::string("--"));
  args.insert(sep, extra.begin(), extra.end());
  return args;
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  for (std::string f; std::getline(in, f, ',');) {
    std::size_t used = 0;
    double v = std::stod(f, &used);
    if (used != f.size()) throw std::invalid_argument("bad split fraction '" + f + "'");
    out.push_back(v);
  }
  return out;
}

struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::string config;
  bool quiet = false;
};

struct Context {
  Common common;
  std::ostream& out;
  std::ostream& err;

  std::uint64_t seed() {
    if (!common.seed) {
      std::random_device rd;
      common.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      err << "seed: " << *common.seed << "\n";
    }
    return *common.seed;
  }
  std::size_t threads() const { return common.threads ? common.threads : default_threads(); }
  std::ostream* log() const { return common.quiet ? nullptr : &err; }
};

// Model and training flags shared by train and search.
struct TrainFlags {
  std::string grammar, data, train_path, valid_path, checkpoint, metrics;
  ModelConfig model;
  TrainConfig train;
  std::string list_rules = "none";
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--grammar,-g", f.grammar, "Grammar file or built-in id (default: from the dataset manifest)");
  app->add_option("--data", f.data, "Dataset file; split 0 trains, split 1 validates");
  app->add_option("--train", f.train_path, "Training trees, one per line");
  app->add_option("--valid", f.valid_path, "Validation trees, one per line");
  app->add_option("--epochs", f.train.epochs, "Training epochs")->capture_default_str();
  app->add_option("--batch-size", f.train.batch_size, "Mini-batch size")->capture_default_str();
  app->add_option("--lr-init", f.train.lr_init, "Initial learning rate")->capture_default_str();
  app->add_option("--lr-min", f.train.lr_min, "Learning rate floor")->capture_default_str();
  app->add_option("--patience", f.train.patience, "Plateau patience in epochs")->capture_default_str();
  app->add_option("--factor", f.train.factor, "Plateau decay factor")->capture_default_str();
  app->add_option("--n", f.model.n, "Code dimension")->capture_default_str();
  app->add_option("--n-vae", f.model.n_vae, "Latent dimension")->capture_default_str();
  app->add_option("--beta", f.model.beta, "KL weight")->capture_default_str();
  app->add_option("--s", f.model.s, "Training noise variance")->capture_default_str();
  app->add_option("--max-rules", f.model.max_rules, "Decoding rule budget")->capture_default_str();
  app->add_option("--list-rules", f.list_rules, "GRU child decoders: none, auto or rule indices")
      ->capture_default_str();
  app->add_option("--metrics", f.metrics, "Per-epoch metrics CSV");
}

struct LoadedData {
  RegularTreeGrammar grammar;
  std::vector<Tree> train, valid;
};

LoadedData load_training_data(const TrainFlags& f) {
  std::vector<Tree> train, valid;
  std::string grammar = f.grammar;
  if (!f.data.empty()) {
    if (!f.train_path.empty() || !f.valid_path.empty())
      throw std::invalid_argument("--data excludes --train and --valid");
    Dataset d = read_dataset(f.data);
    if (grammar.empty() && fs::exists(f.data + ".manifest")) grammar = d.spec.grammar;
    train = d.split(0);
    valid = d.split(1);
  } else {
    if (f.train_path.empty()) throw std::invalid_argument("need --data or --train");
    train = read_trees(f.train_path);
    if (!f.valid_path.empty()) valid = read_trees(f.valid_path);
  }
  if (grammar.empty()) throw std::invalid_argument("need --grammar");
  return {load_grammar(grammar), std::move(train), std::move(valid)};
}

void print_vector(std::ostream& out, const Vector& v) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  out << "\n";
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recursive tree grammar autoencoders: grammars, training, evaluation and latent search.",
               "rtgae"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Context ctx{{}, out, err};
  Common& common = ctx.common;
  app.add_option("--seed", common.seed, "Random seed; drawn from entropy and echoed to stderr if absent");
  app.add_option("--threads", common.threads, "Worker threads for evaluation (0: all cores)");
  app.add_option("--config", common.config, "key=value file; command-line flags take precedence");
  app.add_flag("--quiet,-q", common.quiet, "No progress output");

  std::map<CLI::App*, std::function<int()>> actions;

  // grammar
  auto* grammar = app.add_subcommand("grammar", "Grammar utilities");
  grammar->require_subcommand(1);
  std::string grammar_arg;
  {
    auto* check = grammar->add_subcommand("check", "Check determinism and report unused nonterminals");
    check->add_option("grammar", grammar_arg, "Grammar file or built-in id")->required();
    actions[check] = [&] {
      auto g = load_grammar(grammar_arg);
      LintReport l = lint(g);
      if (l.empty) err << "warning: the grammar's language is empty\n";
      for (const auto& nt : l.unreachable) err << "warning: unreachable nonterminal " << nt << "\n";
      for (const auto& nt : l.unproductive) err << "warning: unproductive nonterminal " << nt << "\n";
      DeterminismReport rep = check_deterministic(g);
      if (rep.deterministic()) {
        out << "deterministic\n";
        return kExitOk;
      }
      out << "nondeterministic\n";
      for (const auto& v : rep.violations) out << "  condition " << v.condition << ": " << v.message << "\n";
      return kExitDomain;
    };
  }
  std::string output;
  {
    auto* det = grammar->add_subcommand("determinize", "Print an equivalent deterministic grammar");
    det->add_option("grammar", grammar_arg, "Grammar file or built-in id")->required();
    det->add_option("--output,-o", output, "Write to a file instead of stdout");
    actions[det] = [&] {
      std::string text = determinize(load_grammar(grammar_arg)).to_text();
      if (output.empty()) {
        out << text;
      } else {
        std::ofstream f(output);
        if (!(f << text)) throw std::runtime_error("cannot write " + output);
      }
      return kExitOk;
    };
  }
  std::size_t max_size = 5;
  bool count_only = false;
  {
    auto* en = grammar->add_subcommand("enumerate", "List every tree of the language up to a size");
    en->add_option("grammar", grammar_arg, "Grammar file or built-in id")->required();
    en->add_option("--max-size", max_size, "Largest tree size")->capture_default_str();
    en->add_flag("--count", count_only, "Print only the number of trees");
    actions[en] = [&] {
      auto trees = language_enumerate(load_grammar(grammar_arg), max_size);
      if (count_only) {
        out << trees.size() << "\n";
      } else {
        for (const auto& t : trees) out << to_string(t) << "\n";
      }
      return kExitOk;
    };
  }

  // tree
  auto* tree = app.add_subcommand("tree", "Parse trees into rule sequences and back");
  tree->require_subcommand(1);
  std::vector<std::string> items;
  std::string file;
  {
    auto* p = tree->add_subcommand("parse", "Print the nonterminal and rule sequence of each tree");
    p->add_option("grammar", grammar_arg, "Grammar file or built-in id")->required();
    p->add_option("trees", items, "Trees in text form");
    p->add_option("--file,-f", file, "Read trees from a file, one per line");
    actions[p] = [&] {
      auto g = load_grammar(grammar_arg);
      std::vector<Tree> trees;
      for (const auto& s : items) trees.push_back(parse_tree(s));
      if (!file.empty()) {
        auto more = read_trees(file);
        trees.insert(trees.end(), more.begin(), more.end());
      }
      if (trees.empty()) throw std::invalid_argument("no trees given");
      for (const auto& t : trees) {
        ParseResult r = parse(g, t);
        out << r.nonterminal;
        for (auto rule : r.rules) out << ' ' << rule;
        out << "\n";
      }
      return kExitOk;
    };
  }
  {
    auto* gen = tree->add_subcommand("generate", "Build the tree for a nonterminal and rule sequence");
    gen->add_option("grammar", grammar_arg, "Grammar file or built-in id")->required();
    gen->add_option("sequence", items, "Start nonterminal followed by rule indices, as printed by tree parse")
        ->required();
    actions[gen] = [&] {
      auto g = load_grammar(grammar_arg);
      std::vector<std::string> tokens;
      for (const auto& item : items) {
        std::istringstream in(item);
        for (std::string t; in >> t;) tokens.push_back(t);
      }
      if (tokens.empty()) throw std::invalid_argument("missing start nonterminal");
      RuleSequence seq;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        std::size_t used = 0;
        unsigned long r = 0;
        try {
          r = std::stoul(tokens[i], &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != tokens[i].size()) throw std::invalid_argument("bad rule index '" + tokens[i] + "'");
        seq.push_back(r);
      }
      out << to_string(generate(g, Nonterminal(tokens[0]), seq)) << "\n";
      return kExitOk;
    };
  }

  // data
  auto* data = app.add_subcommand("data", "Synthetic datasets");
  data->require_subcommand(1);
  DatasetSpec spec;
  std::string splits = "0.9,0.1";
  {
    auto* gen = data->add_subcommand("gen", "Generate a dataset file and its manifest");
    gen->add_option("--grammar,-g", spec.grammar, "boolean, expressions or cnf")->capture_default_str();
    gen->add_option("--count,-n", spec.count, "Number of trees")->capture_default_str();
    gen->add_option("--splits", splits, "Comma-separated split fractions")->capture_default_str();
    gen->add_option("--output,-o", output, "Output file")->required();
    actions[gen] = [&] {
      spec.seed = ctx.seed();
      spec.splits = parse_fractions(splits);
      Dataset d = make_dataset(spec);
      write_dataset(output, d);
      if (!common.quiet) {
        err << "wrote " << d.trees.size() << " trees to " << output << " (";
        for (std::size_t s = 0; s < spec.splits.size(); ++s)
          err << (s ? ", " : "") << d.split(s).size();
        err << ")\n";
      }
      return kExitOk;
    };
  }

  // train / search
  TrainFlags tf;
  {
    auto* train_cmd = app.add_subcommand("train", "Train a model and keep the best validation checkpoint");
    add_train_flags(train_cmd, tf);
    train_cmd->add_option("--output,-o", tf.checkpoint, "Checkpoint path")->required();
    actions[train_cmd] = [&] {
      LoadedData d = load_training_data(tf);
      tf.model.list_rules = ListRules::parse(tf.list_rules);
      tf.model.seed = ctx.seed();
      tf.train.seed = tf.model.seed;
      tf.train.checkpoint = tf.checkpoint;
      if (!tf.metrics.empty()) tf.train.metrics_csv = tf.metrics;
      tf.train.log = ctx.log();
      TrainResult r = train(Model(d.grammar, tf.model), tf.train, d.train, d.valid);
      if (!common.quiet)
        err << "best epoch " << r.best_epoch << " loss " << r.best_valid_loss << "\n";
      if (tf.train.epochs == 0) save_model(tf.checkpoint, r.model);
      return kExitOk;
    };
  }
  std::size_t trials = 20;
  double range_lo = 1e-5, range_hi = 1.0;
  {
    auto* search = app.add_subcommand("search", "Random search over beta and s by validation RMSE");
    add_train_flags(search, tf);
    search->add_option("--trials", trials, "Number of trials")->capture_default_str();
    search->add_option("--range-lo", range_lo, "Lower end of the log-uniform range")->capture_default_str();
    search->add_option("--range-hi", range_hi, "Upper end of the log-uniform range")->capture_default_str();
    actions[search] = [&] {
      LoadedData d = load_training_data(tf);
      if (d.valid.empty()) throw std::invalid_argument("search needs a validation split");
      tf.model.list_rules = ListRules::parse(tf.list_rules);
      tf.model.seed = ctx.seed();
      tf.train.seed = tf.model.seed;
      tf.train.log = ctx.log();
      SearchResult r = hyper_search(d.grammar, tf.model, tf.train, d.train, d.valid, trials, range_lo, range_hi);
      out << std::setprecision(17) << "beta=" << r.beta << "\ns=" << r.s << "\n";
      return kExitOk;
    };
  }

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a trained model");
  eval->require_subcommand(1);
  std::string model_path, csv;
  std::optional<std::size_t> split;
  std::size_t samples = 1000;
  {
    auto* rmse = eval->add_subcommand("rmse", "Autoencoding tree edit distance RMSE");
    rmse->add_option("--model,-m", model_path, "Checkpoint")->required();
    rmse->add_option("--data", file, "Trees to autoencode")->required();
    rmse->add_option("--split", split, "Split index from the manifest (default: the last one)");
    rmse->add_option("--csv", csv, "Per-tree report");
    actions[rmse] = [&] {
      auto m = load_model(model_path);
      Dataset d = read_dataset(file);
      const std::size_t k = split.value_or(d.spec.splits.size() - 1);
      if (k >= d.spec.splits.size()) throw std::invalid_argument("no split " + std::to_string(k));
      auto trees = d.split(k);
      EvalReport rep = autoencoding_rmse(m.model, trees, ctx.threads());
      if (!csv.empty()) write_eval_csv(csv, rep, trees);
      out << summary(rep) << "\n";
      return kExitOk;
    };
  }
  {
    auto* corr = eval->add_subcommand("correctness", "Share of decoded latent samples that parse");
    corr->add_option("--model,-m", model_path, "Checkpoint")->required();
    corr->add_option("--samples", samples, "Number of latent samples")->capture_default_str();
    corr->add_option("--csv", csv, "Per-sample report");
    actions[corr] = [&] {
      auto m = load_model(model_path);
      EvalReport rep = syntactic_correctness_rate(m.model, samples, Rng(ctx.seed()), ctx.threads());
      if (!csv.empty()) write_eval_csv(csv, rep, {});
      out << summary(rep) << "\n";
      return kExitOk;
    };
  }

  // encode / decode
  {
    auto* enc = app.add_subcommand("encode", "Print the latent mean of each tree");
    enc->add_option("--model,-m", model_path, "Checkpoint")->required();
    enc->add_option("trees", items, "Trees in text form");
    enc->add_option("--file,-f", file, "Read trees from a file, one per line");
    actions[enc] = [&] {
      auto m = load_model(model_path);
      std::vector<Tree> trees;
      for (const auto& s : items) trees.push_back(parse_tree(s));
      if (!file.empty()) {
        auto more = read_trees(file);
        trees.insert(trees.end(), more.begin(), more.end());
      }
      if (trees.empty()) throw std::invalid_argument("no trees given");
      for (const auto& t : trees) print_vector(out, latent_mean(m.model, t));
      return kExitOk;
    };
  }
  std::vector<double> latent;
  std::size_t random_count = 0;
  bool sample_mode = false, complete = false;
  {
    auto* dec = app.add_subcommand("decode", "Decode latent vectors into trees");
    dec->add_option("--model,-m", model_path, "Checkpoint")->required();
    dec->add_option("latent", latent, "One latent vector (n_VAE numbers); use -- before negative values");
    dec->add_option("--random", random_count, "Decode this many standard normal latent samples");
    dec->add_flag("--sample", sample_mode, "Sample rules instead of greedy argmax");
    dec->add_flag("--complete", complete, "Finish budget-exhausted trees with the cheapest completion");
    actions[dec] = [&] {
      auto m = load_model(model_path);
      const auto dim = m.model.config().n_vae;
      std::vector<Vector> vs;
      if (!latent.empty()) {
        if (static_cast<Eigen::Index>(latent.size()) != dim)
          throw std::invalid_argument("expected " + std::to_string(dim) + " latent values, got " +
                                      std::to_string(latent.size()));
        vs.push_back(Eigen::Map<const Vector>(latent.data(), dim));
      }
      std::optional<Rng> rng;
      if (random_count > 0 || sample_mode) rng.emplace(ctx.seed());
      for (std::size_t i = 0; i < random_count; ++i) vs.push_back(rng->normal_vector(dim));
      if (vs.empty()) throw std::invalid_argument("give a latent vector or --random");
      int status = kExitOk;
      for (const auto& v : vs) {
        try {
          Decoded d = decode(m.model, rho(m.model, v), m.model.start(),
                             sample_mode ? DecodeMode::kSample : DecodeMode::kGreedy,
                             rng ? &*rng : nullptr);
          out << to_string(d.tree) << "\n";
        } catch (const DecodeBudgetError& e) {
          if (!complete) throw;
          err << "warning: " << e.what() << "; completed\n";
          out << to_string(complete_partial(m.model, m.model.start(), e)) << "\n";
          status = kExitDomain;
        }
      }
      return status;
    };
  }

  // optimize
  ESConfig es;
  std::size_t restarts = 1;
  std::string objective = "expressions";
  {
    auto* opt = app.add_subcommand("optimize", "Evolution-strategy search in latent space");
    opt->add_option("--model,-m", model_path, "Checkpoint")->required();
    opt->add_option("--objective", objective, "Objective (expressions)")->capture_default_str();
    opt->add_option("--iterations", es.iterations, "Generations")->capture_default_str();
    opt->add_option("--budget", es.budget, "Maximum number of decoded candidates")->capture_default_str();
    opt->add_option("--population", es.population, "Candidates per generation (0: 4 + 3 ln n_VAE)")
        ->capture_default_str();
    opt->add_option("--parents", es.parents, "Selected candidates (0: half the population)")
        ->capture_default_str();
    opt->add_option("--sigma0", es.sigma0, "Initial step size")->capture_default_str();
    opt->add_option("--restarts", restarts, "Independent runs with seeds seed, seed+1, ...")
        ->capture_default_str();
    opt->add_option("--history", csv, "History CSV of the first run");
    actions[opt] = [&] {
      if (objective != "expressions") throw std::invalid_argument("unknown objective '" + objective + "'");
      auto m = load_model(model_path);
      const std::uint64_t seed = ctx.seed();
      std::vector<double> scores;
      out << std::setprecision(6);
      for (std::size_t r = 0; r < restarts; ++r) {
        ESConfig c = es;
        c.seed = seed + r;
        c.threads = ctx.threads();
        ESResult res = optimize_latent(m.model, expressions_objective(), c);
        if (r == 0 && !csv.empty()) write_history_csv(csv, res);
        scores.push_back(res.best_score);
        out << "run " << r << " score " << res.best_score << " tree "
            << (res.best_tree ? to_string(*res.best_tree) : "-") << "\n";
      }
      std::sort(scores.begin(), scores.end());
      const std::size_t k = scores.size();
      out << "median " << (k % 2 ? scores[k / 2] : (scores[k / 2 - 1] + scores[k / 2]) / 2) << "\n";
      return kExitOk;
    };
  }

  try {
    std::vector<std::string> args = apply_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }

  for (auto& [cmd, action] : actions) {
    if (!cmd->parsed()) continue;
    try {
      return action();
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitDomain;
    }
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace rtgae::cli
