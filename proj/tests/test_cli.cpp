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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "rtgae/datasets.hpp"
#include "rtgae/eval.hpp"

using namespace rtgae;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result rtgae_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string grammar_file(const std::string& id) {
  return (fs::path(RTGAE_GRAMMAR_DIR) / (id + ".rtg")).string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t count_lines(const std::string& s, const std::string& needle = "") {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) n += l.find(needle) != std::string::npos;
  return n;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("grammar commands") {
  Result r = rtgae_cli({"grammar", "check", grammar_file("boolean")});
  CHECK(r.code == 0);
  CHECK(r.out == "deterministic\n");
  CHECK(rtgae_cli({"grammar", "check", "expressions"}).code == 0);
  CHECK(rtgae_cli({"grammar", "check", "boolean.rtg"}).code == 0);
  Result cnf = rtgae_cli({"grammar", "check", grammar_file("cnf")});
  CHECK(cnf.code == 1);
  CHECK(cnf.out.rfind("nondeterministic\n", 0) == 0);

  Result det = rtgae_cli({"grammar", "determinize", grammar_file("cnf")});
  REQUIRE(det.code == 0);
  CHECK(count_lines(det.out, "->") == 21);
  auto g = RegularTreeGrammar::from_text(det.out);
  CHECK(det.out == determinize(builtin_grammar("cnf")).to_text());
  CHECK(check_deterministic(g).deterministic());

  Result en = rtgae_cli({"grammar", "enumerate", "boolean", "--max-size", "4", "--count"});
  CHECK(en.out == "40\n");
  Result list = rtgae_cli({"grammar", "enumerate", "boolean", "--max-size", "2"});
  CHECK(list.out == "not(x)\nnot(y)\nx\ny\n");

  Result missing = rtgae_cli({"grammar", "check", "no_such_grammar.rtg"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("no_such_grammar") != std::string::npos);

  TempDir dir("rtgae_test_cli_grammar");
  {
    std::ofstream f(dir / "bad.rtg");
    f << "start S;\nS -> and(S S);\n";
  }
  Result bad = rtgae_cli({"grammar", "check", dir / "bad.rtg"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("bad.rtg") != std::string::npos);
}

TEST_CASE("tree commands") {
  Result p = rtgae_cli({"tree", "parse", grammar_file("boolean"), "and(x, not(y))"});
  CHECK(p.code == 0);
  CHECK(p.out == "S 0 3 2 4\n");
  Result gen = rtgae_cli({"tree", "generate", "boolean", "S", "0", "3", "2", "4"});
  CHECK(gen.out == "and(x, not(y))\n");
  CHECK(rtgae_cli({"tree", "generate", "boolean", "S 0 3 2 4"}).out == "and(x, not(y))\n");

  for (const auto& [id, trees] : {std::pair{std::string("boolean"), gen_boolean(50, 1)},
                                  std::pair{std::string("expressions"), gen_expressions(50, 1)}}) {
    for (const auto& t : trees) {
      const std::string text = to_string(t);
      Result pr = rtgae_cli({"tree", "parse", grammar_file(id), text});
      REQUIRE(pr.code == 0);
      std::string seq = pr.out.substr(0, pr.out.size() - 1);
      CHECK(rtgae_cli({"tree", "generate", grammar_file(id), seq}).out == text + "\n");
    }
  }

  CHECK(rtgae_cli({"tree", "parse", "boolean", "and(x)"}).code == 1);
  CHECK(rtgae_cli({"tree", "parse", "boolean", "and(x,"}).code == 1);
  CHECK(rtgae_cli({"tree", "generate", "boolean", "S", "0", "3"}).code == 1);
  CHECK(rtgae_cli({"tree", "generate", "boolean", "S", "zero"}).code == 2);
  CHECK(rtgae_cli({"tree", "parse", "boolean"}).code == 2);
}

TEST_CASE("usage errors") {
  CHECK(rtgae_cli({}).code == 2);
  CHECK(rtgae_cli({"frobnicate"}).code == 2);
  CHECK(rtgae_cli({"grammar", "check", "boolean", "--no-such-flag"}).code == 2);
  CHECK(rtgae_cli({"grammar", "check"}).code == 2);
  CHECK(rtgae_cli({"data", "gen", "--count", "ten", "-o", "x"}).code == 2);
  Result help = rtgae_cli({"--help"});
  CHECK(help.code == 0);
  for (const char* cmd : {"grammar", "tree", "data", "train", "search", "eval", "encode", "decode", "optimize"})
    CHECK(help.out.find(cmd) != std::string::npos);
  Result train_help = rtgae_cli({"train", "--help"});
  CHECK(train_help.code == 0);
  CHECK(train_help.out.find("--lr-init") != std::string::npos);
}

TEST_CASE("data, training and evaluation") {
  TempDir dir("rtgae_test_cli_pipeline");
  Result noseed = rtgae_cli({"data", "gen", "-g", "boolean", "-n", "120", "-o", dir / "a.txt"});
  CHECK(noseed.code == 0);
  CHECK(noseed.err.rfind("seed: ", 0) == 0);
  REQUIRE(rtgae_cli({"data", "gen", "-n", "120", "--seed", "4", "-o", dir / "b.txt"}).code == 0);
  REQUIRE(rtgae_cli({"data", "gen", "-n", "120", "--seed", "4", "-o", dir / "c.txt", "-q"}).code == 0);
  CHECK(slurp(dir / "b.txt") == slurp(dir / "c.txt"));
  CHECK(slurp(dir / "b.txt.manifest") == slurp(dir / "c.txt.manifest"));
  CHECK(read_dataset(dir / "b.txt").split(1).size() == 12);
  CHECK(rtgae_cli({"data", "gen", "--splits", "0.5,0.2", "--seed", "1", "-o", dir / "d.txt"}).code == 2);

  {
    std::ofstream cfg(dir / "train.cfg");
    cfg << "# small model\nepochs = 2\nn = 12\nn_vae = 4\nbatch-size=8\n";
  }
  const std::vector<std::string> base{"train", "--data", dir / "b.txt", "--config", dir / "train.cfg",
                                      "--seed", "7", "-q"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return rtgae_cli(a);
  };
  REQUIRE(with({"-o", dir / "m1.ckpt", "--metrics", dir / "m1.csv"}).code == 0);
  REQUIRE(with({"-o", dir / "m2.ckpt", "--metrics", dir / "m2.csv"}).code == 0);
  CHECK(slurp(dir / "m1.ckpt") == slurp(dir / "m2.ckpt"));
  CHECK(count_lines(slurp(dir / "m1.csv")) == 1 + 4);
  // flags beat the config file
  REQUIRE(with({"--epochs", "1", "-o", dir / "m3.ckpt", "--metrics", dir / "m3.csv"}).code == 0);
  CHECK(count_lines(slurp(dir / "m3.csv")) == 1 + 2);
  auto loaded = load_model(dir / "m1.ckpt");
  CHECK(loaded.model.config().n == 12);
  CHECK(loaded.model.config().n_vae == 4);
  CHECK(with({"-o", dir / "m4.ckpt", "--batch-size", "0"}).code == 2);
  CHECK(rtgae_cli({"train", "--train", dir / "b.txt", "-o", dir / "m5.ckpt"}).code == 2);

  Result rmse = rtgae_cli({"eval", "rmse", "-m", dir / "m1.ckpt", "--data", dir / "b.txt",
                           "--csv", dir / "e.csv", "--threads", "2"});
  REQUIRE(rmse.code == 0);
  auto valid = read_dataset(dir / "b.txt").split(1);
  EvalReport direct = autoencoding_rmse(loaded.model, valid);
  CHECK(rmse.out == summary(direct) + "\n");
  CHECK(count_lines(slurp(dir / "e.csv")) == 1 + 12 + 1);

  Result c1 = rtgae_cli({"eval", "correctness", "-m", dir / "m1.ckpt", "--samples", "50", "--seed", "2"});
  Result c2 = rtgae_cli({"eval", "correctness", "-m", dir / "m1.ckpt", "--samples", "50", "--seed", "2",
                         "--threads", "3"});
  CHECK(c1.code == 0);
  CHECK(c1.out == c2.out);
  CHECK(c1.out.find("correctness_rate=") != std::string::npos);

  const Tree t = valid.front();
  Result enc = rtgae_cli({"encode", "-m", dir / "m1.ckpt", to_string(t)});
  REQUIRE(enc.code == 0);
  std::istringstream nums(enc.out);
  std::vector<std::string> dec_args{"decode", "-m", dir / "m1.ckpt", "--complete", "--"};
  for (std::string v; nums >> v;) dec_args.push_back(v);
  CHECK(dec_args.size() == 5 + 4);
  Result dec = rtgae_cli(dec_args);
  CHECK(dec.out == to_string(direct.outputs[0]) + "\n");
  CHECK(rtgae_cli({"decode", "-m", dir / "m1.ckpt", "0.5"}).code == 2);
  Result rnd = rtgae_cli({"decode", "-m", dir / "m1.ckpt", "--random", "3", "--sample", "--seed", "1",
                          "--complete"});
  CHECK(count_lines(rnd.out) == 3);
  CHECK(rtgae_cli({"encode", "-m", dir / "m1.ckpt", "and(x)"}).code == 1);
  CHECK(rtgae_cli({"eval", "rmse", "-m", dir / "missing.ckpt", "--data", dir / "b.txt"}).code == 1);

  Result search = rtgae_cli({"search", "--data", dir / "b.txt", "--config", dir / "train.cfg", "--epochs",
                             "1", "--trials", "2", "--seed", "3", "-q"});
  REQUIRE(search.code == 0);
  std::istringstream kv(search.out);
  std::string beta, s;
  std::getline(kv, beta);
  std::getline(kv, s);
  CHECK(beta.rfind("beta=", 0) == 0);
  CHECK(s.rfind("s=", 0) == 0);
  const double b = std::stod(beta.substr(5));
  CHECK(b >= 1e-5);
  CHECK(b <= 1.0);
}

TEST_CASE("latent optimization command") {
  TempDir dir("rtgae_test_cli_optimize");
  REQUIRE(rtgae_cli({"data", "gen", "-g", "expressions", "-n", "60", "--seed", "2", "-o", dir / "e.txt",
                     "-q"}).code == 0);
  REQUIRE(rtgae_cli({"train", "--data", dir / "e.txt", "--epochs", "1", "--n", "8", "--n-vae", "4",
                     "--seed", "1", "-o", dir / "e.ckpt", "-q"}).code == 0);
  const std::vector<std::string> args{"optimize", "-m", dir / "e.ckpt", "--iterations", "3", "--budget",
                                      "30", "--restarts", "2", "--seed", "5"};
  auto a = args;
  a.insert(a.end(), {"--history", dir / "h.csv"});
  Result r1 = rtgae_cli(a);
  REQUIRE(r1.code == 0);
  CHECK(count_lines(r1.out, "run ") == 2);
  CHECK(count_lines(r1.out, "median ") == 1);
  CHECK(rtgae_cli(args).out == r1.out);
  // 4 + floor(3 ln 4) = 8 candidates per generation
  CHECK(count_lines(slurp(dir / "h.csv")) == 1 + 3 * 8);
  auto b = args;
  b[6] = "10";
  CHECK(rtgae_cli(b).code == 2);
  CHECK(rtgae_cli({"optimize", "-m", dir / "e.ckpt", "--objective", "logp"}).code == 2);
}
