#include "p2c/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "p2c/common.hpp"

namespace p2c {

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail("config", "invalid value for '" + key + "': '" + value + "'");
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    if (!value.empty() && value[0] == '-') bad_value(key, value);
    uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(value);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : split_commas(value)) out.push_back(parse_double(key, item));
  if (out.empty()) bad_value(key, value);
  return out;
}

std::vector<std::pair<int, int>> parse_grids(const std::string& key, const std::string& value) {
  std::vector<std::pair<int, int>> out;
  for (const std::string& item : split_commas(value)) {
    std::size_t x = item.find('x');
    if (x == std::string::npos || x == 0 || x + 1 == item.size()) bad_value(key, item);
    out.emplace_back(int(parse_int(key, item.substr(0, x))),
                     int(parse_int(key, item.substr(x + 1))));
  }
  if (out.empty()) bad_value(key, value);
  return out;
}

NoiseMode parse_noise_mode(const std::string& key, const std::string& value) {
  if (value == "fixed") return NoiseMode::fixed;
  if (value == "range") return NoiseMode::range;
  bad_value(key, value);
}

PerceptionSource::Kind parse_percep_source(const std::string& key, const std::string& value) {
  if (value == "frozen_random") return PerceptionSource::Kind::frozen_random;
  if (value == "desk_trained") return PerceptionSource::Kind::desk_trained;
  if (value == "file") return PerceptionSource::Kind::file;
  bad_value(key, value);
}

void apply_key(RunConfig& rc, const std::string& key, const std::string& value, bool run_scope) {
  TrainConfig& t = rc.train;
  if (run_scope && key == "data.root") {
    rc.data_root = value;
  } else if (run_scope && key == "run.out_dir") {
    rc.out_dir = value;
  } else if (run_scope && key == "ablate.grids") {
    rc.ablate_grids = parse_grids(key, value);
  } else if (key == "model.resolution") {
    t.resolution = int(parse_int(key, value));
  } else if (key == "model.base_channels") {
    t.base_channels = int(parse_int(key, value));
  } else if (key == "model.residual_blocks") {
    t.residual_blocks = int(parse_int(key, value));
  } else if (key == "model.coarse_grid") {
    t.coarse_grid = int(parse_int(key, value));
  } else if (key == "model.fine_grid") {
    t.fine_grid = int(parse_int(key, value));
  } else if (key == "model.use_coarse") {
    t.use_coarse = parse_bool(key, value);
  } else if (key == "model.use_fine") {
    t.use_fine = parse_bool(key, value);
  } else if (key == "loss.gamma") {
    t.weights.gamma = parse_double(key, value);
  } else if (key == "loss.sigma") {
    t.weights.sigma = parse_double(key, value);
  } else if (key == "loss.mix_coarse") {
    t.weights.mix_coarse = parse_double(key, value);
  } else if (key == "loss.mix_fine") {
    t.weights.mix_fine = parse_double(key, value);
  } else if (key == "loss.lambda_n") {
    t.weights.lambda = parse_double_list(key, value);
  } else if (key == "loss.use_cyc") {
    t.use_cyc = parse_bool(key, value);
  } else if (key == "loss.use_percep") {
    t.use_percep = parse_bool(key, value);
  } else if (key == "loss.percep_symmetric") {
    t.percep_symmetric = parse_bool(key, value);
  } else if (key == "noise.mode") {
    t.noise.mode = parse_noise_mode(key, value);
  } else if (key == "noise.alpha") {
    t.noise.alpha = parse_double(key, value);
  } else if (key == "noise.alpha_min") {
    t.noise.alpha_min = parse_double(key, value);
  } else if (key == "noise.alpha_max") {
    t.noise.alpha_max = parse_double(key, value);
  } else if (key == "percep.source") {
    t.perception.kind = parse_percep_source(key, value);
  } else if (key == "percep.path") {
    t.perception.path = value;
  } else if (key == "percep.seed") {
    t.perception.seed = parse_uint(key, value);
  } else if (key == "percep.base_channels") {
    t.perception.config.base_channels = int(parse_int(key, value));
  } else if (key == "percep.layers") {
    t.perception.config.layers = int(parse_int(key, value));
  } else if (key == "percep.steps") {
    t.perception.steps = int(parse_int(key, value));
  } else if (key == "percep.resolution") {
    t.perception.resolution = int(parse_int(key, value));
  } else if (key == "train.steps") {
    t.total_steps = long(parse_int(key, value));
  } else if (key == "train.batch") {
    t.batch_size = int(parse_int(key, value));
  } else if (key == "train.lr") {
    t.learning_rate = parse_double(key, value);
  } else if (key == "train.beta1") {
    t.beta1 = parse_double(key, value);
  } else if (key == "train.beta2") {
    t.beta2 = parse_double(key, value);
  } else if (key == "train.seed") {
    t.seed = parse_uint(key, value);
  } else if (key == "train.checkpoint_every") {
    t.checkpoint_every = long(parse_int(key, value));
  } else if (key == "train.sample_every") {
    t.sample_every = long(parse_int(key, value));
  } else {
    fail("config", "unknown key '" + key + "'");
  }
}

RunConfig parse_kv_text(const std::string& text, bool run_scope, const std::string& context) {
  RunConfig rc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    check(eq != std::string::npos, "config",
          context + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    check(!key.empty(), "config", context + ":" + std::to_string(lineno) + ": empty key");
    check(seen.insert(key).second, "config",
          context + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    apply_key(rc, key, value, run_scope);
  }
  return rc;
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_double_list(const std::vector<double>& vals) {
  std::string out;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(vals[i]);
  }
  return out;
}

std::string fmt_grids(const std::vector<std::pair<int, int>>& grids) {
  std::string out;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(grids[i].first) + "x" + std::to_string(grids[i].second);
  }
  return out;
}

const char* noise_mode_name(NoiseMode m) {
  return m == NoiseMode::fixed ? "fixed" : "range";
}

const char* percep_source_name(PerceptionSource::Kind k) {
  switch (k) {
    case PerceptionSource::Kind::frozen_random: return "frozen_random";
    case PerceptionSource::Kind::desk_trained: return "desk_trained";
    case PerceptionSource::Kind::file: return "file";
  }
  fail("usage", "unknown perception source");
}

void emit_train(std::ostream& os, const TrainConfig& t) {
  os << "model.resolution = " << t.resolution << "\n";
  os << "model.base_channels = " << t.base_channels << "\n";
  os << "model.residual_blocks = " << t.residual_blocks << "\n";
  os << "model.coarse_grid = " << t.coarse_grid << "\n";
  os << "model.fine_grid = " << t.fine_grid << "\n";
  os << "model.use_coarse = " << fmt_bool(t.use_coarse) << "\n";
  os << "model.use_fine = " << fmt_bool(t.use_fine) << "\n";
  os << "loss.gamma = " << fmt_double(t.weights.gamma) << "\n";
  os << "loss.sigma = " << fmt_double(t.weights.sigma) << "\n";
  os << "loss.mix_coarse = " << fmt_double(t.weights.mix_coarse) << "\n";
  os << "loss.mix_fine = " << fmt_double(t.weights.mix_fine) << "\n";
  os << "loss.lambda_n = " << fmt_double_list(t.weights.lambda) << "\n";
  os << "loss.use_cyc = " << fmt_bool(t.use_cyc) << "\n";
  os << "loss.use_percep = " << fmt_bool(t.use_percep) << "\n";
  os << "loss.percep_symmetric = " << fmt_bool(t.percep_symmetric) << "\n";
  os << "noise.mode = " << noise_mode_name(t.noise.mode) << "\n";
  os << "noise.alpha = " << fmt_double(t.noise.alpha) << "\n";
  os << "noise.alpha_min = " << fmt_double(t.noise.alpha_min) << "\n";
  os << "noise.alpha_max = " << fmt_double(t.noise.alpha_max) << "\n";
  os << "percep.source = " << percep_source_name(t.perception.kind) << "\n";
  os << "percep.path = " << t.perception.path.string() << "\n";
  os << "percep.seed = " << t.perception.seed << "\n";
  os << "percep.base_channels = " << t.perception.config.base_channels << "\n";
  os << "percep.layers = " << t.perception.config.layers << "\n";
  os << "percep.steps = " << t.perception.steps << "\n";
  os << "percep.resolution = " << t.perception.resolution << "\n";
  os << "train.steps = " << t.total_steps << "\n";
  os << "train.batch = " << t.batch_size << "\n";
  os << "train.lr = " << fmt_double(t.learning_rate) << "\n";
  os << "train.beta1 = " << fmt_double(t.beta1) << "\n";
  os << "train.beta2 = " << fmt_double(t.beta2) << "\n";
  os << "train.seed = " << t.seed << "\n";
  os << "train.checkpoint_every = " << t.checkpoint_every << "\n";
  os << "train.sample_every = " << t.sample_every << "\n";
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& context) {
  return parse_kv_text(text, true, context);
}

RunConfig parse_run_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "io", "cannot open config file " + path.string());
  std::ostringstream body;
  body << in.rdbuf();
  return parse_run_config_text(body.str(), path.string());
}

void apply_override(RunConfig& cfg, const std::string& key_equals_value) {
  std::size_t eq = key_equals_value.find('=');
  check(eq != std::string::npos && eq > 0, "usage",
        "override must look like key=value: '" + key_equals_value + "'");
  std::string key = trim(key_equals_value.substr(0, eq));
  std::string value = trim(key_equals_value.substr(eq + 1));
  apply_key(cfg, key, value, true);
}

std::string canonical_run_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  os << "data.root = " << cfg.data_root.string() << "\n";
  os << "run.out_dir = " << cfg.out_dir.string() << "\n";
  emit_train(os, cfg.train);
  os << "ablate.grids = " << fmt_grids(cfg.ablate_grids) << "\n";
  return os.str();
}

std::string train_config_text(const TrainConfig& cfg) {
  std::ostringstream os;
  emit_train(os, cfg);
  return os.str();
}

uint64_t train_config_hash(const TrainConfig& cfg) {
  return fnv1a64(train_config_text(cfg));
}

TrainConfig parse_train_config_text(const std::string& text) {
  return parse_kv_text(text, false, "embedded config").train;
}

}  // namespace p2c
