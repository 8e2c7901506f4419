#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <opencv2/imgcodecs.hpp>
#include <string>
#include <vector>

#include "doctest.h"
#include "p2c/cli.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int rc = -1;
  std::string out, err;
};

// Runs the CLI in-process with stdout/stderr redirected to files. The fd
// dance keeps doctest's own reporting on the real terminal.
CliResult run(const std::vector<std::string>& args) {
  static const fs::path cap = testsup::fresh_dir("clicap");
  std::vector<std::string> full = {"p2c"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& s : full) argv.push_back(s.c_str());

  const fs::path op = cap / "out.txt", ep = cap / "err.txt";
  std::fflush(stdout);
  std::fflush(stderr);
  int so = dup(1), se = dup(2);
  CliResult r;
  if (so < 0 || se < 0 || !std::freopen(op.c_str(), "w", stdout) ||
      !std::freopen(ep.c_str(), "w", stderr)) {
    r.err = "capture setup failed";
    return r;
  }
  r.rc = p2c::run_cli(int(argv.size()), argv.data());
  std::fflush(stdout);
  std::fflush(stderr);
  dup2(so, 1);
  dup2(se, 2);
  close(so);
  close(se);
  r.out = testsup::read_file(op);
  r.err = testsup::read_file(ep);
  return r;
}

std::string smoke_config(const fs::path& root, const fs::path& out_dir) {
  std::string t;
  t += "# tiny smoke configuration\n";
  t += "data.root = " + root.string() + "\n";
  t += "run.out_dir = " + out_dir.string() + "\n";
  t += "model.resolution = 16\n";
  t += "model.base_channels = 8\n";
  t += "model.residual_blocks = 1\n";
  t += "model.coarse_grid = 2\n";
  t += "model.fine_grid = 8\n";
  t += "loss.lambda_n = 1,1,1\n";
  t += "percep.source = frozen_random\n";
  t += "percep.seed = 7\n";
  t += "percep.base_channels = 4\n";
  t += "percep.layers = 3\n";
  t += "train.steps = 2\n";
  t += "train.checkpoint_every = 2\n";
  return t;
}

double json_field(const std::string& j, const std::string& key) {
  const std::string needle = "\"" + key + "\": ";
  const std::size_t pos = j.find(needle);
  REQUIRE(pos != std::string::npos);
  return std::stod(j.substr(pos + needle.size()));
}

}  // namespace

TEST_CASE("train, translate, sweep and score round trip") {
  const fs::path root = testsup::make_dataset("cli", 3, 3, 2, 2, 16);
  const fs::path work = testsup::fresh_dir("cliwork");
  const fs::path out1 = work / "out1", out2 = work / "out2";
  const std::string cfg_text = smoke_config(root, out1);
  testsup::write_file(work / "run.cfg", cfg_text);

  // two seeded runs land on byte-identical traces
  CliResult t1 = run({"train", "--config", (work / "run.cfg").string(), "--seed", "7"});
  CHECK(t1.rc == 0);
  CHECK(t1.err == "");
  CHECK(t1.out.find("trained to step 2") != std::string::npos);
  CliResult t2 = run({"train", "--config", (work / "run.cfg").string(), "--seed", "7", "--set",
                      "run.out_dir=" + out2.string()});
  CHECK(t2.rc == 0);
  REQUIRE(fs::exists(out1 / "trace.csv"));
  REQUIRE(fs::exists(out2 / "trace.csv"));
  CHECK(testsup::read_file(out1 / "trace.csv") == testsup::read_file(out2 / "trace.csv"));

  // the run directory echoes its provenance
  CHECK(testsup::read_file(out1 / "config.txt") == cfg_text);
  CHECK(testsup::read_file(out1 / "version.txt") == "p2c 1.0\n");
  const std::string resolved = testsup::read_file(out1 / "config.resolved");
  CHECK(resolved.find("train.seed = 7") != std::string::npos);
  CHECK(resolved.find("model.resolution = 16") != std::string::npos);

  const fs::path ckpt = out1 / "checkpoints" / "step_000002.dptc";
  REQUIRE(fs::exists(ckpt));
  CHECK(fs::exists(out1 / "samples" / "step_000002.png"));

  // a changed config cannot silently resume an old checkpoint
  CliResult bad = run({"train", "--config", (work / "run.cfg").string(), "--seed", "7", "--set",
                       "run.out_dir=" + (work / "out3").string(), "--set", "loss.gamma=5",
                       "--resume", ckpt.string()});
  CHECK(bad.rc == 1);
  CHECK(bad.err.find("error: checkpoint:") != std::string::npos);
  CHECK(bad.err.find("configuration") != std::string::npos);

  // translate: explicit --alpha 1.0 and the default agree byte for byte
  const fs::path d1 = work / "tx1", d2 = work / "tx2";
  CliResult x1 = run({"translate", "--checkpoint", ckpt.string(), "--input",
                      (root / "testA").string(), "--out", d1.string(), "--alpha", "1.0",
                      "--seed", "5"});
  CHECK(x1.rc == 0);
  CliResult x2 = run({"translate", "--checkpoint", ckpt.string(), "--input",
                      (root / "testA").string(), "--out", d2.string(), "--seed", "5"});
  CHECK(x2.rc == 0);
  for (const char* name : {"img_0000.png", "img_0001.png"}) {
    REQUIRE(fs::exists(d1 / name));
    CHECK(testsup::read_file(d1 / name) == testsup::read_file(d2 / name));
  }
  cv::Mat tx = cv::imread((d1 / "img_0000.png").string(), cv::IMREAD_COLOR);
  REQUIRE(!tx.empty());
  CHECK(tx.rows == 16);
  CHECK(tx.cols == 16);

  // the reverse direction drives the other generator
  CliResult xb = run({"translate", "--checkpoint", ckpt.string(), "--input",
                      (root / "testB").string(), "--out", (work / "txb").string(),
                      "--direction", "b2a"});
  CHECK(xb.rc == 0);
  CHECK(fs::exists(work / "txb" / "img_0000.png"));

  // sweep grid: one row per input, one labeled column per alpha
  const fs::path sweep = work / "sweep.png";
  CliResult sw = run({"sweep-alpha", "--checkpoint", ckpt.string(), "--input",
                      (root / "testA" / "img_0000.png").string(), "--alphas", "1.0,0.5",
                      "--out", sweep.string()});
  CHECK(sw.rc == 0);
  cv::Mat grid = cv::imread(sweep.string(), cv::IMREAD_COLOR);
  REQUIRE(!grid.empty());
  CHECK(grid.rows == 16 + 18);
  CHECK(grid.cols == 32);

  // score: balanced one-hot over two images scores the class count
  const fs::path json = work / "score.json";
  CliResult sc = run({"score", "--checkpoint", ckpt.string(), "--input",
                      (root / "testA").string(), "--classifier", "onehot", "--classes", "2",
                      "--splits", "1", "--out", json.string()});
  CHECK(sc.rc == 0);
  CHECK(sc.err.find("warning:") != std::string::npos);
  CHECK(sc.err.find("not comparable") != std::string::npos);
  REQUIRE(fs::exists(json));
  const std::string j = testsup::read_file(json);
  CHECK(sc.out == j);
  CHECK(std::fabs(json_field(j, "mean") - 2.0) <= 1e-6);
  CHECK(json_field(j, "n_images") == 2.0);
  CHECK(j.find("one-hot") != std::string::npos);
}

TEST_CASE("config errors surface as single diagnostic lines") {
  const fs::path work = testsup::fresh_dir("clicfg");
  testsup::write_file(work / "no_root.cfg", "run.out_dir = " + (work / "o").string() + "\n");
  CliResult r = run({"train", "--config", (work / "no_root.cfg").string()});
  CHECK(r.rc == 1);
  CHECK(r.err == "error: config: data.root is required\n");

  testsup::write_file(work / "bogus.cfg", "bogus.key = 1\n");
  CliResult u = run({"train", "--config", (work / "bogus.cfg").string()});
  CHECK(u.rc == 1);
  CHECK(u.err.find("unknown key 'bogus.key'") != std::string::npos);

  CliResult m = run({"train", "--config", (work / "absent.cfg").string()});
  CHECK(m.rc == 1);
  CHECK(m.err.find("error: io:") != std::string::npos);
}

TEST_CASE("argument validation happens before any heavy work") {
  CliResult d = run({"translate", "--checkpoint", "nowhere.dptc", "--input", "x", "--out", "y",
                     "--direction", "sideways"});
  CHECK(d.rc == 1);
  CHECK(d.err.find("a2b or b2a") != std::string::npos);

  CliResult s = run({"frobnicate"});
  CHECK(s.rc != 0);

  CliResult v = run({"--version"});
  CHECK(v.rc == 0);
  CHECK(v.out.find("p2c 1.0") != std::string::npos);
}
