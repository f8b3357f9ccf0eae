#include "cot/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "cot/errors.hpp"

namespace cot {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& message) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + message);
}

double parse_double(const std::string& origin, std::size_t line,
                    const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(origin, line, key + ": expected a number, got \"" + value + "\"");
  }
}

std::uint64_t parse_u64(const std::string& origin, std::size_t line,
                        const std::string& key, const std::string& value) {
  try {
    if (!value.empty() && value[0] == '-') throw std::invalid_argument("neg");
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(origin, line,
         key + ": expected a non-negative integer, got \"" + value + "\"");
  }
}

bool parse_bool(const std::string& origin, std::size_t line,
                const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  fail(origin, line, key + ": expected true or false, got \"" + value + "\"");
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : value) {
    if (c == ',') {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  const std::string last = trim(current);
  if (!last.empty() || !parts.empty()) parts.push_back(last);
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

std::vector<std::size_t> parse_size_list(const std::string& origin,
                                         std::size_t line,
                                         const std::string& key,
                                         const std::string& value) {
  std::vector<std::size_t> out;
  for (const std::string& part : split_commas(value)) {
    if (part.empty()) fail(origin, line, key + ": empty list element");
    out.push_back(static_cast<std::size_t>(parse_u64(origin, line, key, part)));
  }
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& origin,
                                          std::size_t line,
                                          const std::string& key,
                                          const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const std::string& part : split_commas(value)) {
    if (part.empty()) fail(origin, line, key + ": empty list element");
    out.push_back(parse_u64(origin, line, key, part));
  }
  return out;
}

std::string render_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string render_bool(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string render_list(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ",";
    out << values[i];
  }
  return out.str();
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ExperimentConfig cfg;
  bool noise_set = false;
  bool standardize_set = false;

  std::map<std::string, std::function<void(std::size_t, const std::string&)>>
      handlers;
  handlers["seed"] = [&](std::size_t ln, const std::string& v) {
    cfg.seed = parse_u64(origin, ln, "seed", v);
  };
  handlers["out"] = [&](std::size_t, const std::string& v) { cfg.out = v; };
  handlers["data.kind"] = [&](std::size_t ln, const std::string& v) {
    if (v != "two_moons" && v != "spirals" && v != "digits" && v != "idx") {
      fail(origin, ln,
           "data.kind: expected two_moons, spirals, digits, or idx, got \"" +
               v + "\"");
    }
    cfg.data.kind = v;
  };
  handlers["data.n"] = [&](std::size_t ln, const std::string& v) {
    cfg.data.n = static_cast<std::size_t>(parse_u64(origin, ln, "data.n", v));
  };
  handlers["data.classes"] = [&](std::size_t ln, const std::string& v) {
    cfg.data.classes =
        static_cast<std::size_t>(parse_u64(origin, ln, "data.classes", v));
  };
  handlers["data.noise"] = [&](std::size_t ln, const std::string& v) {
    cfg.data.noise = parse_double(origin, ln, "data.noise", v);
    noise_set = true;
  };
  handlers["data.train_fraction"] = [&](std::size_t ln, const std::string& v) {
    cfg.data.train_fraction = parse_double(origin, ln, "data.train_fraction", v);
  };
  handlers["data.stratified"] = [&](std::size_t ln, const std::string& v) {
    cfg.data.stratified = parse_bool(origin, ln, "data.stratified", v);
  };
  handlers["data.standardize"] = [&](std::size_t ln, const std::string& v) {
    cfg.data.standardize = parse_bool(origin, ln, "data.standardize", v);
    standardize_set = true;
  };
  handlers["data.images"] = [&](std::size_t, const std::string& v) {
    cfg.data.images = v;
  };
  handlers["data.labels"] = [&](std::size_t, const std::string& v) {
    cfg.data.labels = v;
  };
  handlers["data.test_images"] = [&](std::size_t, const std::string& v) {
    cfg.data.test_images = v;
  };
  handlers["data.test_labels"] = [&](std::size_t, const std::string& v) {
    cfg.data.test_labels = v;
  };
  handlers["model.hidden"] = [&](std::size_t ln, const std::string& v) {
    cfg.hidden = parse_size_list(origin, ln, "model.hidden", v);
  };
  handlers["train.mode"] = [&](std::size_t ln, const std::string& v) {
    try {
      cfg.train.mode = train_mode_from_string(v);
    } catch (const InputError& e) {
      fail(origin, ln, std::string("train.mode: ") + e.what());
    }
  };
  handlers["train.epochs"] = [&](std::size_t ln, const std::string& v) {
    cfg.train.epochs =
        static_cast<std::size_t>(parse_u64(origin, ln, "train.epochs", v));
  };
  handlers["train.batch_size"] = [&](std::size_t ln, const std::string& v) {
    cfg.train.batch_size =
        static_cast<std::size_t>(parse_u64(origin, ln, "train.batch_size", v));
  };
  handlers["train.lr"] = [&](std::size_t ln, const std::string& v) {
    cfg.train.schedule.initial_lr = parse_double(origin, ln, "train.lr", v);
  };
  handlers["train.lr_factor"] = [&](std::size_t ln, const std::string& v) {
    cfg.train.schedule.factor = parse_double(origin, ln, "train.lr_factor", v);
  };
  handlers["train.milestones"] = [&](std::size_t ln, const std::string& v) {
    cfg.train.schedule.milestones =
        parse_size_list(origin, ln, "train.milestones", v);
  };
  handlers["train.momentum"] = [&](std::size_t ln, const std::string& v) {
    cfg.train.momentum = parse_double(origin, ln, "train.momentum", v);
  };
  handlers["train.weight_decay"] = [&](std::size_t ln, const std::string& v) {
    cfg.train.weight_decay = parse_double(origin, ln, "train.weight_decay", v);
  };
  handlers["train.cot_separate_velocity"] = [&](std::size_t ln,
                                                const std::string& v) {
    cfg.train.cot_separate_velocity =
        parse_bool(origin, ln, "train.cot_separate_velocity", v);
  };
  handlers["eval.export_embeddings"] = [&](std::size_t ln, const std::string& v) {
    cfg.export_embeddings = parse_bool(origin, ln, "eval.export_embeddings", v);
  };
  handlers["attack.kind"] = [&](std::size_t ln, const std::string& v) {
    if (v == "fgsm") {
      cfg.attack.config.kind = AttackKind::kFgsm;
    } else if (v == "ifgsm") {
      cfg.attack.config.kind = AttackKind::kIfgsm;
    } else {
      fail(origin, ln, "attack.kind: expected fgsm or ifgsm, got \"" + v + "\"");
    }
  };
  handlers["attack.epsilon"] = [&](std::size_t ln, const std::string& v) {
    cfg.attack.config.epsilon = parse_double(origin, ln, "attack.epsilon", v);
  };
  handlers["attack.iterations"] = [&](std::size_t ln, const std::string& v) {
    cfg.attack.config.iterations =
        static_cast<std::size_t>(parse_u64(origin, ln, "attack.iterations", v));
  };
  handlers["attack.step_size"] = [&](std::size_t ln, const std::string& v) {
    cfg.attack.config.step_size = parse_double(origin, ln, "attack.step_size", v);
  };
  handlers["attack.gradient_mode"] = [&](std::size_t ln, const std::string& v) {
    if (v != "auto" && v != "primary_only" && v != "primary_plus_complement") {
      fail(origin, ln,
           "attack.gradient_mode: expected auto, primary_only, or "
           "primary_plus_complement, got \"" +
               v + "\"");
    }
    cfg.attack.gradient_mode = v;
    if (v == "primary_only") {
      cfg.attack.config.gradient_mode = GradientMode::kPrimaryOnly;
    } else if (v == "primary_plus_complement") {
      cfg.attack.config.gradient_mode = GradientMode::kPrimaryPlusComplement;
    }
  };
  handlers["attack.complement_sign"] = [&](std::size_t ln, const std::string& v) {
    if (v == "minimized_loss") {
      cfg.attack.config.complement_sign = ComplementSign::kMinimizedLoss;
    } else if (v == "raw_entropy") {
      cfg.attack.config.complement_sign = ComplementSign::kRawEntropy;
    } else {
      fail(origin, ln,
           "attack.complement_sign: expected minimized_loss or raw_entropy, "
           "got \"" +
               v + "\"");
    }
  };
  handlers["attack.clip"] = [&](std::size_t ln, const std::string& v) {
    if (v != "auto" && v != "none") {
      const auto parts = split_commas(v);
      if (parts.size() != 2) {
        fail(origin, ln,
             "attack.clip: expected auto, none, or \"lo,hi\", got \"" + v +
                 "\"");
      }
      const double lo = parse_double(origin, ln, "attack.clip", parts[0]);
      const double hi = parse_double(origin, ln, "attack.clip", parts[1]);
      if (!(lo < hi)) fail(origin, ln, "attack.clip: need lo < hi");
      cfg.attack.config.clip_range = {lo, hi};
    }
    cfg.attack.clip = v;
  };
  handlers["attack.allow_large_epsilon"] = [&](std::size_t ln,
                                               const std::string& v) {
    cfg.attack.config.allow_large_epsilon =
        parse_bool(origin, ln, "attack.allow_large_epsilon", v);
  };
  handlers["attack.export_idx"] = [&](std::size_t ln, const std::string& v) {
    cfg.attack.export_idx = parse_bool(origin, ln, "attack.export_idx", v);
  };
  handlers["compare.seeds"] = [&](std::size_t ln, const std::string& v) {
    cfg.compare_seeds = parse_u64_list(origin, ln, "compare.seeds", v);
    if (cfg.compare_seeds.empty()) {
      fail(origin, ln, "compare.seeds: need at least one seed");
    }
  };

  std::set<std::string> seen;
  std::istringstream stream(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(origin, line_no, "expected key=value, got \"" + line + "\"");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "empty key");
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      fail(origin, line_no, "unknown key \"" + key + "\"");
    }
    if (!seen.insert(key).second) {
      fail(origin, line_no, "duplicate key \"" + key + "\"");
    }
    it->second(line_no, value);
  }

  if (cfg.data.kind.empty()) {
    throw ConfigError(origin + ": missing required key data.kind");
  }

  // Kind-dependent defaults and key applicability.
  const std::string& kind = cfg.data.kind;
  auto forbid = [&](const char* key, bool set, const std::string& why) {
    if (set) {
      throw ConfigError(origin + ": " + key + " does not apply to data.kind=" +
                        kind + " (" + why + ")");
    }
  };
  if (kind == "idx") {
    forbid("data.n", seen.count("data.n") > 0, "size comes from the files");
    forbid("data.noise", seen.count("data.noise") > 0,
           "loaded data is not resampled");
    forbid("data.classes", seen.count("data.classes") > 0,
           "classes come from the labels");
    if (cfg.data.images.empty() || cfg.data.labels.empty()) {
      throw ConfigError(origin +
                        ": data.kind=idx requires data.images and data.labels");
    }
    if (cfg.data.test_images.empty() != cfg.data.test_labels.empty()) {
      throw ConfigError(origin +
                        ": data.test_images and data.test_labels must be "
                        "given together");
    }
  } else {
    forbid("data.images", seen.count("data.images") > 0, "generated corpus");
    forbid("data.labels", seen.count("data.labels") > 0, "generated corpus");
    forbid("data.test_images", seen.count("data.test_images") > 0,
           "generated corpus");
    forbid("data.test_labels", seen.count("data.test_labels") > 0,
           "generated corpus");
    if (kind != "spirals") {
      forbid("data.classes", seen.count("data.classes") > 0,
             "only spirals take a class count");
    }
  }
  if (!noise_set) {
    cfg.data.noise = kind == "two_moons" ? 0.2
                     : kind == "spirals" ? 0.25
                     : kind == "digits"  ? 0.05
                                         : 0.0;
  }
  if (!standardize_set) {
    cfg.data.standardize = kind == "two_moons" || kind == "spirals";
  }

  // Value validation, line numbers no longer available but still at load time.
  try {
    if (kind != "idx" || cfg.data.test_images.empty()) {
      if (!(cfg.data.train_fraction > 0.0 && cfg.data.train_fraction < 1.0)) {
        throw InputError("data.train_fraction must lie strictly between 0 and 1");
      }
    }
    if (kind == "spirals" && cfg.data.classes < 2) {
      throw InputError("data.classes must be >= 2");
    }
    if (kind != "idx" && cfg.data.noise < 0.0) {
      throw InputError("data.noise must be >= 0");
    }
    cfg.train.seed = cfg.seed;
    cfg.train.validate();
    cfg.attack.config.validate();
  } catch (const InputError& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  cfg.config_hash = compute_config_hash(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

void apply_overrides(ExperimentConfig& config,
                     const std::optional<std::uint64_t>& seed,
                     const std::optional<std::string>& out) {
  if (seed) {
    config.seed = *seed;
    config.train.seed = *seed;
  }
  if (out) config.out = *out;
  config.config_hash = compute_config_hash(config);
}

std::string canonical_config(const ExperimentConfig& config) {
  std::vector<std::string> lines;
  const std::string& kind = config.data.kind;
  lines.push_back("data.kind=" + kind);
  if (kind == "idx") {
    lines.push_back("data.images=" + config.data.images);
    lines.push_back("data.labels=" + config.data.labels);
    lines.push_back("data.test_images=" + config.data.test_images);
    lines.push_back("data.test_labels=" + config.data.test_labels);
  } else {
    lines.push_back("data.n=" + std::to_string(config.data.n));
    lines.push_back("data.noise=" + render_double(config.data.noise));
    if (kind == "spirals") {
      lines.push_back("data.classes=" + std::to_string(config.data.classes));
    }
  }
  lines.push_back("data.train_fraction=" +
                  render_double(config.data.train_fraction));
  lines.push_back("data.stratified=" + render_bool(config.data.stratified));
  lines.push_back("data.standardize=" + render_bool(config.data.standardize));
  lines.push_back("model.hidden=" + render_list(config.hidden));
  lines.push_back("train.mode=" + to_string(config.train.mode));
  lines.push_back("train.epochs=" + std::to_string(config.train.epochs));
  lines.push_back("train.batch_size=" + std::to_string(config.train.batch_size));
  lines.push_back("train.lr=" + render_double(config.train.schedule.initial_lr));
  lines.push_back("train.lr_factor=" +
                  render_double(config.train.schedule.factor));
  lines.push_back("train.milestones=" +
                  render_list(config.train.schedule.milestones));
  lines.push_back("train.momentum=" + render_double(config.train.momentum));
  lines.push_back("train.weight_decay=" +
                  render_double(config.train.weight_decay));
  lines.push_back("train.cot_separate_velocity=" +
                  render_bool(config.train.cot_separate_velocity));
  lines.push_back("eval.export_embeddings=" +
                  render_bool(config.export_embeddings));
  lines.push_back("attack.kind=" + to_string(config.attack.config.kind));
  lines.push_back("attack.epsilon=" + render_double(config.attack.config.epsilon));
  lines.push_back("attack.iterations=" +
                  std::to_string(config.attack.config.iterations));
  lines.push_back("attack.step_size=" +
                  render_double(config.attack.config.step_size));
  lines.push_back("attack.gradient_mode=" + config.attack.gradient_mode);
  lines.push_back(
      "attack.complement_sign=" +
      std::string(config.attack.config.complement_sign ==
                          ComplementSign::kMinimizedLoss
                      ? "minimized_loss"
                      : "raw_entropy"));
  lines.push_back("attack.clip=" + config.attack.clip);
  lines.push_back("attack.allow_large_epsilon=" +
                  render_bool(config.attack.config.allow_large_epsilon));
  lines.push_back("attack.export_idx=" + render_bool(config.attack.export_idx));
  lines.push_back("compare.seeds=" + render_list(config.compare_seeds));
  lines.push_back("seed=" + std::to_string(config.seed));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const std::string& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

std::uint64_t compute_config_hash(const ExperimentConfig& config) {
  const std::string canonical = canonical_config(config);
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

DataBundle build_data(const ExperimentConfig& config) {
  Rng root(config.seed);
  Rng data_rng = root.split(streams::kData);
  Rng split_rng = root.split(streams::kSplit);
  const DataConfig& d = config.data;

  if (d.kind == "idx") {
    DataBundle bundle;
    if (!d.test_images.empty()) {
      bundle.train = load_idx(d.images, d.labels);
      bundle.test = load_idx(d.test_images, d.test_labels);
      if (bundle.train.dim() != bundle.test.dim()) {
        throw InputError("idx train and test image dimensions differ");
      }
      bundle.train.num_classes = bundle.test.num_classes = std::max(
          bundle.train.num_classes, bundle.test.num_classes);
    } else {
      SplitResult parts = split(load_idx(d.images, d.labels), d.train_fraction,
                                split_rng, d.stratified);
      bundle.train = std::move(parts.train);
      bundle.test = std::move(parts.test);
    }
    if (d.standardize) standardize(bundle.train, bundle.test);
    return bundle;
  }

  Dataset full;
  if (d.kind == "two_moons") {
    full = gen_two_moons(d.n, d.noise, data_rng);
  } else if (d.kind == "spirals") {
    full = gen_spirals(d.n, d.classes, d.noise, data_rng);
  } else if (d.kind == "digits") {
    full = gen_digits(d.n, d.noise, data_rng);
  } else {
    throw InputError("unknown data.kind \"" + d.kind + "\"");
  }
  SplitResult parts = split(full, d.train_fraction, split_rng, d.stratified);
  DataBundle bundle{std::move(parts.train), std::move(parts.test)};
  if (d.standardize) standardize(bundle.train, bundle.test);
  return bundle;
}

MlpArchitecture architecture_for(const ExperimentConfig& config,
                                 const DataBundle& data) {
  MlpArchitecture arch;
  arch.input_dim = data.train.dim();
  arch.hidden_dims = config.hidden;
  arch.num_classes = data.train.num_classes;
  return arch;
}

}  // namespace cot
