#include "p2c/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "p2c/common.hpp"
#include "p2c/config.hpp"
#include "p2c/data.hpp"
#include "p2c/eval.hpp"
#include "p2c/gradcheck.hpp"
#include "p2c/noisemix.hpp"
#include "p2c/trainer.hpp"

namespace p2c {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "p2c 1.0";

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  check(in.good(), "io", "cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  check(out.good(), "io", "cannot write " + p.string());
  out << text;
  out.flush();
  check(out.good(), "io", "cannot write " + p.string());
}

bool has_image_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return e == ".png" || e == ".jpg" || e == ".jpeg" || e == ".bmp";
}

// A single image file, or every image directly under a directory.
std::vector<fs::path> collect_inputs(const fs::path& input) {
  check(fs::exists(input), "io", "input " + input.string() + " does not exist");
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input))
      if (entry.is_regular_file() && has_image_ext(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    check(!files.empty(), "data", "no images under " + input.string());
  } else {
    files.push_back(input);
  }
  return files;
}

std::vector<double> parse_alpha_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t pos = 0;
      double v = std::stod(item, &pos);
      check(pos == item.size(), "usage", "bad alpha '" + item + "'");
      out.push_back(v);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail("usage", "bad alpha '" + item + "'");
    }
  }
  check(!out.empty(), "usage", "--alphas needs at least one value");
  return out;
}

RunConfig load_run_config(const std::string& config_path, const std::vector<std::string>& sets) {
  RunConfig rc = parse_run_config_file(config_path);
  for (const std::string& kv : sets) apply_override(rc, kv);
  return rc;
}

void default_desk_path(RunConfig& rc) {
  if (rc.train.use_percep &&
      rc.train.perception.kind == PerceptionSource::Kind::desk_trained &&
      rc.train.perception.path.empty())
    rc.train.perception.path = rc.data_root;
}

// Echoes the configuration into the run directory: the user's file verbatim,
// the fully resolved key set, and the tool version.
void prepare_out_dir(const RunConfig& rc, const std::string& original_text) {
  check(!rc.out_dir.empty(), "config", "run.out_dir is required");
  std::error_code ec;
  fs::create_directories(rc.out_dir, ec);
  check(fs::is_directory(rc.out_dir), "io", "cannot create run.out_dir " + rc.out_dir.string());
  write_text_file(rc.out_dir / "config.txt", original_text);
  write_text_file(rc.out_dir / "config.resolved", canonical_run_config_text(rc));
  write_text_file(rc.out_dir / "version.txt", std::string(kVersion) + "\n");
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& resume, bool seed_set, uint64_t seed) {
  RunConfig rc = load_run_config(config_path, sets);
  if (seed_set) rc.train.seed = seed;
  check(!rc.data_root.empty(), "config", "data.root is required");
  default_desk_path(rc);
  rc.train.validate();
  Dataset ds = load_dataset(rc.data_root);
  prepare_out_dir(rc, read_text_file(config_path));
  Trainer t = resume.empty() ? Trainer(rc.train, ds)
                             : Trainer::from_checkpoint(resume, ds, train_config_hash(rc.train));
  t.run(rc.out_dir);
  std::printf("trained to step %ld; outputs under %s\n", t.step(), rc.out_dir.string().c_str());
  return 0;
}

int cmd_translate(const std::string& checkpoint, const std::string& input, const std::string& out,
                  double alpha, uint64_t seed, const std::string& direction) {
  check(direction == "a2b" || direction == "b2a", "usage",
        "--direction must be a2b or b2a, got '" + direction + "'");
  InferenceModel m = load_inference_model(checkpoint);
  const Generator& g = direction == "b2a" ? m.g2 : m.g1;
  std::vector<fs::path> files = collect_inputs(input);
  std::error_code ec;
  fs::create_directories(out, ec);
  check(fs::is_directory(out), "io", "cannot create output directory " + out);

  NoGradGuard ng;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Tensor4 raw = load_image_raw(files[i], m.cfg.resolution);
    Tensor4 mixed =
        mix_noise_with(raw, alpha, noise_field(raw.shape(), mix_seed(seed, uint64_t(i))));
    Tensor4 img = g(normalize_to_unit(mixed));
    export_image(img, fs::path(out) / (files[i].stem().string() + ".png"));
  }
  std::printf("translated %zu image%s -> %s\n", files.size(), files.size() == 1 ? "" : "s",
              out.c_str());
  return 0;
}

int cmd_sweep(const std::string& checkpoint, const std::string& input, const std::string& alphas_csv,
              uint64_t seed, const std::string& out) {
  std::vector<double> alphas = parse_alpha_list(alphas_csv);
  InferenceModel m = load_inference_model(checkpoint);
  std::vector<fs::path> files = collect_inputs(input);
  fs::path out_path(out);
  if (out_path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out_path.parent_path(), ec);
  }

  std::vector<Tensor4> tiles;
  std::vector<std::string> labels;
  for (double a : alphas) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "a=%g", a);
    labels.push_back(buf);
  }
  for (const fs::path& f : files) {
    Tensor4 raw = load_image_raw(f, m.cfg.resolution);
    std::vector<Tensor4> row = alpha_sweep(m.g1, raw, alphas, seed);
    tiles.insert(tiles.end(), row.begin(), row.end());
  }
  export_labeled_grid(tiles, int(alphas.size()), labels, out_path);
  std::printf("alpha sweep (%zu input%s x %zu alphas) -> %s\n", files.size(),
              files.size() == 1 ? "" : "s", alphas.size(), out.c_str());
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& sets) {
  RunConfig rc = load_run_config(config_path, sets);
  check(!rc.data_root.empty(), "config", "data.root is required");
  default_desk_path(rc);
  rc.train.validate();
  Dataset ds = load_dataset(rc.data_root);
  prepare_out_dir(rc, read_text_file(config_path));
  AblateResult res = ablate(rc.train, ds, rc.out_dir, rc.ablate_grids);
  std::printf("%zu variants trained; comparison grid %s\n", res.variant_ids.size(),
              res.grid_path.string().c_str());
  return 0;
}

int cmd_gradcheck(int size, uint64_t seed, double eps, bool corrupt) {
  GradCheckOptions opt;
  opt.size = size;
  opt.seed = seed;
  opt.eps = eps;
  opt.corrupt = corrupt;
  const double threshold = 1e-4;
  std::vector<GradCheckEntry> entries = gradcheck_suite(opt);
  bool ok = true;
  for (const GradCheckEntry& e : entries) {
    const bool pass = e.max_rel_error < threshold;
    ok = ok && pass;
    std::printf("%-24s %11.3e  %s\n", e.component.c_str(), e.max_rel_error, pass ? "ok" : "FAIL");
  }
  if (ok)
    std::printf("gradcheck passed: %zu components within %g\n", entries.size(), threshold);
  else
    std::printf("gradcheck FAILED\n");
  return ok ? 0 : 1;
}

int cmd_score(const std::string& checkpoint, const std::string& input,
              const std::string& classifier, int classes, int splits, uint64_t seed, int steps,
              const std::string& data_root, const std::string& out_json) {
  InferenceModel m = load_inference_model(checkpoint);
  std::vector<fs::path> files = collect_inputs(input);

  std::vector<Tensor4> translated;
  {
    NoGradGuard ng;
    for (const fs::path& f : files) translated.push_back(m.g1(preprocess(f, m.cfg.resolution)));
  }

  ClassifierHead clf;
  if (classifier == "uniform") {
    clf = uniform_classifier(classes);
  } else if (classifier == "onehot") {
    clf = round_robin_onehot_classifier(classes);
  } else if (classifier == "desk") {
    check(!data_root.empty(), "usage", "--classifier desk needs --data <dataset root>");
    Dataset ds = load_dataset(data_root);
    clf = desk_classifier(ds, seed, steps, 64);
  } else {
    fail("usage", "unknown classifier '" + classifier + "' (expected uniform, onehot or desk)");
  }

  ScoreReport rep = score_images(clf, translated, splits);
  std::fprintf(stderr, "warning: %s\n", rep.warning.c_str());
  std::fputs(rep.to_json().c_str(), stdout);
  if (!out_json.empty()) write_text_file(out_json, rep.to_json());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"dual-discriminator unpaired photo-to-caricature translation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model from a config file");
  std::string t_config, t_resume;
  std::vector<std::string> t_sets;
  uint64_t t_seed = 0;
  train->add_option("--config", t_config, "key = value config file")->required();
  train->add_option("--set", t_sets, "config override key=value (repeatable)");
  train->add_option("--resume", t_resume, "checkpoint to resume from");
  auto* t_seed_opt = train->add_option("--seed", t_seed, "override train.seed");

  auto* translate = app.add_subcommand("translate", "run a generator over images");
  std::string x_ckpt, x_input, x_out, x_dir = "a2b";
  double x_alpha = 1.0;
  uint64_t x_seed = 0;
  translate->add_option("--checkpoint", x_ckpt, "trained checkpoint")->required();
  translate->add_option("--input", x_input, "image file or directory")->required();
  translate->add_option("--out", x_out, "output directory")->required();
  translate->add_option("--alpha", x_alpha, "noise mix proportion of the input (default 1.0)");
  translate->add_option("--seed", x_seed, "noise seed");
  translate->add_option("--direction", x_dir, "a2b (default) or b2a");

  auto* sweep = app.add_subcommand("sweep-alpha", "grid of translations across noise levels");
  std::string s_ckpt, s_input, s_out, s_alphas = "1.0,0.75,0.5,0.25,0.0";
  uint64_t s_seed = 0;
  sweep->add_option("--checkpoint", s_ckpt, "trained checkpoint")->required();
  sweep->add_option("--input", s_input, "image file or directory")->required();
  sweep->add_option("--out", s_out, "output grid image path")->required();
  sweep->add_option("--alphas", s_alphas, "comma-separated alpha list");
  sweep->add_option("--seed", s_seed, "noise seed (one field shared across the sweep)");

  auto* ablate_cmd = app.add_subcommand("ablate", "train the loss/grid variant matrix");
  std::string a_config;
  std::vector<std::string> a_sets;
  ablate_cmd->add_option("--config", a_config, "key = value config file")->required();
  ablate_cmd->add_option("--set", a_sets, "config override key=value (repeatable)");

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "verify gradients on toy networks");
  int g_size = 16;
  uint64_t g_seed = 1;
  double g_eps = 1e-5;
  bool g_corrupt = false;
  gradcheck_cmd->add_option("--size", g_size, "toy input size (power of two, default 16)");
  gradcheck_cmd->add_option("--seed", g_seed, "sampling seed");
  gradcheck_cmd->add_option("--eps", g_eps, "finite-difference step");
  gradcheck_cmd->add_flag("--corrupt-gradient", g_corrupt)->group("");

  auto* score = app.add_subcommand("score", "translate a folder and score the outputs");
  std::string c_ckpt, c_input, c_clf, c_data, c_out;
  int c_classes = 2, c_splits = 10, c_steps = 200;
  uint64_t c_seed = 7;
  score->add_option("--checkpoint", c_ckpt, "trained checkpoint")->required();
  score->add_option("--input", c_input, "image file or directory to translate")->required();
  score->add_option("--classifier", c_clf, "uniform, onehot or desk")->required();
  score->add_option("--classes", c_classes, "class count for the stub classifiers");
  score->add_option("--splits", c_splits, "score splits (default 10)");
  score->add_option("--seed", c_seed, "desk classifier training seed");
  score->add_option("--steps", c_steps, "desk classifier training steps");
  score->add_option("--data", c_data, "dataset root for the desk classifier");
  score->add_option("--out", c_out, "also write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train->parsed())
      return cmd_train(t_config, t_sets, t_resume, t_seed_opt->count() > 0, t_seed);
    if (translate->parsed()) return cmd_translate(x_ckpt, x_input, x_out, x_alpha, x_seed, x_dir);
    if (sweep->parsed()) return cmd_sweep(s_ckpt, s_input, s_alphas, s_seed, s_out);
    if (ablate_cmd->parsed()) return cmd_ablate(a_config, a_sets);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(g_size, g_seed, g_eps, g_corrupt);
    if (score->parsed())
      return cmd_score(c_ckpt, c_input, c_clf, c_classes, c_splits, c_seed, c_steps, c_data, c_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace p2c
