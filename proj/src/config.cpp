#include "privae/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace privae {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct RawValue {
  std::string text;
  int line = 0;
  bool consumed = false;
};

// line-indexed key/value store with typed, range-checked extraction
class ConfigReader {
 public:
  ConfigReader(const std::string& text, std::string origin)
      : origin_(std::move(origin)) {
    static const std::vector<std::string> known_sections = {
        "model", "prior", "divergence", "dp", "train", "data", "audit"};
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(lineno, "unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (std::find(known_sections.begin(), known_sections.end(), section) ==
            known_sections.end()) {
          fail(lineno, "unknown section [" + section + "]");
        }
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        fail(lineno, "expected `key = value`, got \"" + line + "\"");
      }
      if (section.empty()) fail(lineno, "key outside any [section]");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail(lineno, "empty key");
      const std::string full = section + "." + key;
      if (values_.count(full)) {
        fail(lineno, "duplicate key '" + full + "' (first at line " +
                         std::to_string(values_[full].line) + ")");
      }
      values_[full] = RawValue{value, lineno, false};
    }
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const RawValue* take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const RawValue* v = take(key);
    return v ? v->text : fallback;
  }

  std::string require_string(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) {
      throw ConfigError(origin_ + ": missing required key '" + key + "'");
    }
    return v->text;
  }

  double parse_double(const RawValue& v, const std::string& key) const {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v.text, &pos);
      if (pos != v.text.size() || !std::isfinite(d)) throw std::exception();
      return d;
    } catch (...) {
      fail(v.line, "key '" + key + "': not a number: \"" + v.text + "\"");
    }
  }

  double get_double(const std::string& key, double fallback, double lo,
                    double hi, bool lo_open = false, bool hi_open = false) {
    const RawValue* v = take(key);
    if (!v) {
      check_range(key, fallback, lo, hi, lo_open, hi_open, 0);
      return fallback;
    }
    const double d = parse_double(*v, key);
    check_range(key, d, lo, hi, lo_open, hi_open, v->line);
    return d;
  }

  double require_double(const std::string& key, double lo, double hi,
                        bool lo_open = false, bool hi_open = false) {
    const RawValue* v = take(key);
    if (!v) {
      throw ConfigError(origin_ + ": missing required key '" + key + "'");
    }
    const double d = parse_double(*v, key);
    check_range(key, d, lo, hi, lo_open, hi_open, v->line);
    return d;
  }

  long parse_int(const RawValue& v, const std::string& key) const {
    try {
      std::size_t pos = 0;
      const long n = std::stol(v.text, &pos);
      if (pos != v.text.size()) throw std::exception();
      return n;
    } catch (...) {
      fail(v.line, "key '" + key + "': not an integer: \"" + v.text + "\"");
    }
  }

  long get_int(const std::string& key, long fallback, long lo, long hi) {
    const RawValue* v = take(key);
    if (!v) return fallback;
    const long n = parse_int(*v, key);
    if (n < lo || n > hi) {
      fail(v->line, "key '" + key + "': value " + std::to_string(n) +
                        " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
    return n;
  }

  long require_int(const std::string& key, long lo, long hi) {
    const RawValue* v = take(key);
    if (!v) {
      throw ConfigError(origin_ + ": missing required key '" + key + "'");
    }
    const long n = parse_int(*v, key);
    if (n < lo || n > hi) {
      fail(v->line, "key '" + key + "': value " + std::to_string(n) +
                        " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
    return n;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const RawValue* v = take(key);
    if (!v) return fallback;
    if (v->text == "true" || v->text == "1") return true;
    if (v->text == "false" || v->text == "0") return false;
    fail(v->line, "key '" + key + "': expected true/false, got \"" + v->text +
                      "\"");
  }

  std::vector<double> get_double_list(const std::string& key,
                                      char sep = ',') {
    const RawValue* v = take(key);
    if (!v) return {};
    return split_doubles(*v, key, sep);
  }

  std::vector<double> split_doubles(const RawValue& v, const std::string& key,
                                    char sep) const {
    std::vector<double> out;
    std::istringstream in(v.text);
    std::string item;
    while (std::getline(in, item, sep)) {
      item = trim(item);
      if (item.empty()) fail(v.line, "key '" + key + "': empty list entry");
      try {
        std::size_t pos = 0;
        const double d = std::stod(item, &pos);
        if (pos != item.size() || !std::isfinite(d)) throw std::exception();
        out.push_back(d);
      } catch (...) {
        fail(v.line, "key '" + key + "': not a number: \"" + item + "\"");
      }
    }
    if (out.empty()) fail(v.line, "key '" + key + "': empty list");
    return out;
  }

  // rows separated by ';', entries by ','; every row must have equal length
  std::vector<std::vector<double>> get_matrix(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) return {};
    std::vector<std::vector<double>> out;
    std::istringstream in(v->text);
    std::string row;
    while (std::getline(in, row, ';')) {
      RawValue rv{trim(row), v->line, true};
      out.push_back(split_doubles(rv, key, ','));
      if (out.back().size() != out.front().size()) {
        fail(v->line, "key '" + key + "': ragged rows");
      }
    }
    return out;
  }

  int line_of(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? 0 : it->second.line;
  }

  void finish() const {
    for (const auto& [key, v] : values_) {
      if (!v.consumed) fail(v.line, "unknown key '" + key + "'");
    }
  }

 private:
  void check_range(const std::string& key, double d, double lo, double hi,
                   bool lo_open, bool hi_open, int line) const {
    const bool bad = (lo_open ? d <= lo : d < lo) || (hi_open ? d >= hi : d > hi);
    if (!bad) return;
    std::ostringstream msg;
    msg << "key '" << key << "': value " << d << " outside "
        << (lo_open ? '(' : '[') << lo << ", " << hi << (hi_open ? ')' : ']');
    fail(line, msg.str());
  }

  std::string origin_;
  std::map<std::string, RawValue> values_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

const char* RunConfig::mode_name(Mode m) {
  switch (m) {
    case Mode::NonPrivate: return "nonprivate";
    case Mode::MicroAgg: return "microagg";
    case Mode::BatchAgg: return "batchagg";
    case Mode::TermWise: return "termwise";
  }
  return "?";
}

const char* RunConfig::source_name(Source s) {
  switch (s) {
    case Source::Pinwheel: return "pinwheel";
    case Source::SynthImages: return "synth_images";
    case Source::File: return "file";
  }
  return "?";
}

bool RunConfig::batch_branch_active() const {
  return mode == Mode::TermWise && clip.c2 > 0.0 &&
         divergence.kind != DivergenceSpec::Kind::None;
}

Prior RunConfig::make_prior() const {
  switch (prior_kind) {
    case Prior::Kind::StandardNormal:
      return Prior::standard_normal(latent_dim);
    case Prior::Kind::SpikeSlab:
      return Prior::spike_slab(latent_dim, gamma, sigma0_sq);
    case Prior::Kind::GaussMixture:
      return Prior::gauss_mixture(mixture_means, mixture_stds,
                                  mixture_weights);
  }
  throw std::logic_error("config: unknown prior kind");
}

VaeArch RunConfig::make_arch(long input_dim) const {
  VaeArch a;
  a.input_dim = static_cast<int>(input_dim);
  a.latent_dim = latent_dim;
  a.hidden1 = hidden1;
  a.hidden2 = hidden2;
  a.likelihood = likelihood;
  return a;
}

Dataset RunConfig::make_dataset() const {
  switch (source) {
    case Source::Pinwheel:
      return pinwheel(data_n, arms, radial_std, tangential_std, rate,
                      data_seed);
    case Source::SynthImages:
      return synth_images(data_n, side, data_seed);
    case Source::File:
      return load_dataset(data_path);
  }
  throw std::logic_error("config: unknown data source");
}

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  ConfigReader r(text, origin);
  RunConfig cfg;

  // [model]
  cfg.latent_dim = static_cast<int>(r.require_int("model.latent_dim", 1, 4096));
  cfg.hidden1 = static_cast<int>(r.get_int("model.hidden1", 64, 1, 1 << 16));
  cfg.hidden2 = static_cast<int>(r.get_int("model.hidden2", 64, 1, 1 << 16));
  {
    const std::string lik = r.require_string("model.likelihood");
    if (lik == "bernoulli") {
      cfg.likelihood = Likelihood::Bernoulli;
    } else if (lik == "gaussian") {
      cfg.likelihood = Likelihood::Gaussian;
    } else {
      r.fail(r.line_of("model.likelihood"),
             "key 'model.likelihood': expected bernoulli or gaussian, got \"" +
                 lik + "\"");
    }
  }

  // [prior]
  {
    const std::string type = r.get_string("prior.type", "standard_normal");
    if (type == "standard_normal") {
      cfg.prior_kind = Prior::Kind::StandardNormal;
    } else if (type == "spike_slab") {
      cfg.prior_kind = Prior::Kind::SpikeSlab;
    } else if (type == "gauss_mixture") {
      cfg.prior_kind = Prior::Kind::GaussMixture;
    } else {
      r.fail(r.line_of("prior.type"),
             "key 'prior.type': expected standard_normal, spike_slab or "
             "gauss_mixture, got \"" +
                 type + "\"");
    }
    cfg.gamma = r.get_double("prior.gamma", 0.8, 0.0, 1.0);
    cfg.sigma0_sq = r.get_double("prior.sigma0_sq", 0.05, 0.0, kInf, true);
    const auto means = r.get_matrix("prior.means");
    const auto stds = r.get_matrix("prior.stds");
    const auto weights = r.get_double_list("prior.weights");
    if (cfg.prior_kind == Prior::Kind::GaussMixture) {
      if (means.empty()) {
        throw ConfigError(origin +
                          ": gauss_mixture prior needs 'prior.means' "
                          "(components separated by ';')");
      }
      const long k = static_cast<long>(means.size());
      const long d = static_cast<long>(means.front().size());
      if (d != cfg.latent_dim) {
        r.fail(r.line_of("prior.means"),
               "key 'prior.means': components have dimension " +
                   std::to_string(d) + ", model.latent_dim is " +
                   std::to_string(cfg.latent_dim));
      }
      cfg.mixture_means.resize(d, k);
      for (long c = 0; c < k; ++c) {
        for (long row = 0; row < d; ++row) {
          cfg.mixture_means(row, c) =
              means[static_cast<std::size_t>(c)][static_cast<std::size_t>(row)];
        }
      }
      if (stds.empty()) {
        throw ConfigError(origin + ": gauss_mixture prior needs 'prior.stds'");
      }
      if (stds.size() == 1 && stds.front().size() == 1) {
        cfg.mixture_stds = ad::Mat::Constant(d, k, stds.front().front());
      } else if (static_cast<long>(stds.size()) == k &&
                 static_cast<long>(stds.front().size()) == d) {
        cfg.mixture_stds.resize(d, k);
        for (long c = 0; c < k; ++c) {
          for (long row = 0; row < d; ++row) {
            cfg.mixture_stds(row, c) =
                stds[static_cast<std::size_t>(c)][static_cast<std::size_t>(row)];
          }
        }
      } else {
        r.fail(r.line_of("prior.stds"),
               "key 'prior.stds': expected one scalar or the same layout as "
               "prior.means");
      }
      if (weights.empty()) {
        cfg.mixture_weights =
            Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
      } else if (static_cast<long>(weights.size()) == k) {
        cfg.mixture_weights =
            Eigen::Map<const Eigen::VectorXd>(weights.data(), k);
      } else {
        r.fail(r.line_of("prior.weights"),
               "key 'prior.weights': expected " + std::to_string(k) +
                   " entries, got " + std::to_string(weights.size()));
      }
    } else if (!means.empty() || !stds.empty() || !weights.empty()) {
      throw ConfigError(origin +
                        ": prior.means/stds/weights only apply to the "
                        "gauss_mixture prior");
    }
  }

  // [divergence]
  {
    const std::string type = r.get_string("divergence.type", "none");
    if (type == "none") {
      cfg.divergence.kind = DivergenceSpec::Kind::None;
    } else if (type == "mmd") {
      cfg.divergence.kind = DivergenceSpec::Kind::DimwiseMMD;
    } else if (type == "reverse_kl") {
      cfg.divergence.kind = DivergenceSpec::Kind::ReverseKL;
    } else {
      r.fail(r.line_of("divergence.type"),
             "key 'divergence.type': expected none, mmd or reverse_kl, got \"" +
                 type + "\"");
    }
    cfg.divergence.alpha = r.get_double("divergence.alpha", 0.0, 0.0, kInf);
    cfg.divergence.scales = r.get_double_list("divergence.scales");
    cfg.divergence.literal_reverse_kl =
        r.get_bool("divergence.literal_reverse_kl", false);
    if (cfg.divergence.kind == DivergenceSpec::Kind::DimwiseMMD) {
      if (cfg.divergence.scales.empty()) {
        throw ConfigError(origin + ": divergence type mmd needs "
                                   "'divergence.scales'");
      }
      for (const double s : cfg.divergence.scales) {
        if (s <= 0.0) {
          r.fail(r.line_of("divergence.scales"),
                 "key 'divergence.scales': scales must be positive");
        }
      }
    } else if (!cfg.divergence.scales.empty()) {
      r.fail(r.line_of("divergence.scales"),
             "key 'divergence.scales': only applies to divergence type mmd");
    }
  }

  // [dp]
  {
    const std::string mode = r.require_string("dp.mode");
    if (mode == "nonprivate") {
      cfg.mode = RunConfig::Mode::NonPrivate;
    } else if (mode == "microagg") {
      cfg.mode = RunConfig::Mode::MicroAgg;
    } else if (mode == "batchagg") {
      cfg.mode = RunConfig::Mode::BatchAgg;
    } else if (mode == "termwise") {
      cfg.mode = RunConfig::Mode::TermWise;
    } else {
      r.fail(r.line_of("dp.mode"),
             "key 'dp.mode': expected nonprivate, microagg, batchagg or "
             "termwise, got \"" +
                 mode + "\"");
    }
    cfg.clip.c = r.get_double("dp.c", 0.0, 0.0, kInf);
    cfg.clip.c1 = r.get_double("dp.c1", 0.0, 0.0, kInf);
    cfg.clip.c2 = r.get_double("dp.c2", 0.0, 0.0, kInf);
    cfg.epsilon = r.get_double("dp.epsilon", 1.0, 0.0, kInf, true);
    cfg.delta = r.get_double("dp.delta", 1e-5, 0.0, 1.0, true, true);
    cfg.accountant_const =
        r.get_double("dp.accountant_const", 1.0, 0.0, kInf, true);
    if ((cfg.mode == RunConfig::Mode::MicroAgg ||
         cfg.mode == RunConfig::Mode::BatchAgg) &&
        cfg.clip.c <= 0.0) {
      throw ConfigError(origin + ": dp.c must be positive for mode " + mode);
    }
    if (cfg.mode == RunConfig::Mode::TermWise && cfg.clip.c1 <= 0.0) {
      throw ConfigError(origin + ": dp.c1 must be positive for mode termwise");
    }
    if (cfg.clip.c2 > 0.0 &&
        cfg.divergence.kind == DivergenceSpec::Kind::None) {
      throw ConfigError(origin +
                        ": dp.c2 > 0 needs a divergence to clip "
                        "(set divergence.type)");
    }
    if (cfg.mode == RunConfig::Mode::TermWise &&
        cfg.divergence.kind != DivergenceSpec::Kind::None &&
        cfg.clip.c2 <= 0.0) {
      throw ConfigError(origin +
                        ": termwise mode with a divergence needs dp.c2 > 0 "
                        "(the batch-wise branch is clipped at c2)");
    }
  }

  // [train]
  cfg.epochs = static_cast<int>(r.require_int("train.epochs", 0, 1 << 20));
  cfg.batch_size =
      static_cast<int>(r.require_int("train.batch_size", 1, 1 << 20));
  cfg.groups = static_cast<int>(r.get_int("train.groups", 1, 1, 1 << 20));
  cfg.draws = static_cast<int>(r.get_int("train.draws", 1, 1, 1 << 12));
  cfg.eta = r.require_double("train.eta", 0.0, kInf);
  cfg.beta = r.get_double("train.beta", 1.0, 0.0, kInf);
  cfg.eval_samples =
      static_cast<int>(r.get_int("train.eval_samples", 0, 0, 1 << 20));
  cfg.eval_draws = static_cast<int>(r.get_int("train.eval_draws", 1, 1, 1 << 12));
  if (cfg.batch_size % cfg.groups != 0) {
    r.fail(r.line_of(r.has("train.groups") ? "train.groups"
                                           : "train.batch_size"),
           "train.groups (" + std::to_string(cfg.groups) +
               ") must divide train.batch_size (" +
               std::to_string(cfg.batch_size) + ")");
  }

  // [data]
  {
    const std::string source = r.require_string("data.source");
    if (source == "pinwheel") {
      cfg.source = RunConfig::Source::Pinwheel;
    } else if (source == "synth_images") {
      cfg.source = RunConfig::Source::SynthImages;
    } else if (source == "file") {
      cfg.source = RunConfig::Source::File;
    } else {
      r.fail(r.line_of("data.source"),
             "key 'data.source': expected pinwheel, synth_images or file, "
             "got \"" +
                 source + "\"");
    }
    cfg.data_path = r.get_string("data.path", "");
    cfg.data_n = static_cast<int>(r.get_int("data.n", 400, 0, 1 << 24));
    cfg.arms = static_cast<int>(r.get_int("data.arms", 4, 1, 1 << 10));
    cfg.radial_std = r.get_double("data.radial_std", 0.3, 0.0, kInf);
    cfg.tangential_std = r.get_double("data.tangential_std", 0.05, 0.0, kInf);
    cfg.rate = r.get_double("data.rate", 0.25, -kInf, kInf);
    cfg.side = static_cast<int>(r.get_int("data.side", 8, 4, 512));
    cfg.data_seed = static_cast<std::uint64_t>(
        r.get_int("data.seed", 1234, 0, std::numeric_limits<long>::max()));
    if (cfg.source == RunConfig::Source::File && cfg.data_path.empty()) {
      throw ConfigError(origin + ": data.source file needs data.path");
    }
    if (cfg.source == RunConfig::Source::Pinwheel &&
        cfg.data_n % cfg.arms != 0) {
      r.fail(r.line_of(r.has("data.n") ? "data.n" : "data.source"),
             "data.arms (" + std::to_string(cfg.arms) +
                 ") must divide data.n (" + std::to_string(cfg.data_n) + ")");
    }
    if (cfg.source != RunConfig::Source::File &&
        cfg.batch_size > cfg.data_n) {
      r.fail(r.line_of("train.batch_size"),
             "train.batch_size (" + std::to_string(cfg.batch_size) +
                 ") exceeds dataset size (" + std::to_string(cfg.data_n) +
                 ")");
    }
  }

  // [audit]
  cfg.audit_trials =
      static_cast<int>(r.get_int("audit.trials", 200, 1, 1 << 20));

  r.finish();

  // semantic checks that need several fields at once
  try {
    cfg.make_prior();
    cfg.divergence.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace privae
