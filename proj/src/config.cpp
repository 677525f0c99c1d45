#include "declust/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace declust {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"source",
       {"kind", "lo", "hi", "weights", "means", "stds", "truncation_radius", "holder_gamma"}},
      {"noise", {"kind", "sigma"}},
      {"kernel", {"kind", "taper_start", "freq_nodes", "cf_floor", "imag_tol"}},
      {"grid", {"nodes", "margin_bandwidths", "sample_margin_sigmas", "offset_refine"}},
      {"clustering", {"k", "restarts", "max_iters", "tol"}},
      {"bandwidth", {"rule", "lambda", "c0", "candidates", "folds"}},
      {"experiment",
       {"n", "master_seed", "sample_file", "n_schedule", "replications", "ref_grid_factor",
        "ref_restart_factor", "threads", "lambdas", "codebook_a", "codebook_b"}},
  };
  return table;
}

std::string trimmed(const std::string& text) {
  const size_t begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const size_t end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(trimmed(current));
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(trimmed(current));
  return parts;
}

double parse_double_value(const std::string& text, const std::string& where) {
  const std::string value = trimmed(text);
  if (value.empty()) throw ConfigError(where + ": empty value");
  errno = 0;
  char* end = nullptr;
  const double parsed = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || errno == ERANGE || !std::isfinite(parsed))
    throw ConfigError(where + ": cannot parse '" + value + "' as a finite number");
  return parsed;
}

long long parse_integer_value(const std::string& text, const std::string& where) {
  const std::string value = trimmed(text);
  if (value.empty()) throw ConfigError(where + ": empty value");
  errno = 0;
  char* end = nullptr;
  const long long parsed = std::strtoll(value.c_str(), &end, 10);
  if (end != value.c_str() + value.size() || errno == ERANGE)
    throw ConfigError(where + ": cannot parse '" + value + "' as an integer");
  return parsed;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_double(values[i]);
  }
  return out;
}

std::string join_sizes(const std::vector<size_t>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_points(const double* coords, int dim, size_t count) {
  std::string out;
  for (size_t i = 0; i < count; ++i) {
    if (i) out += ";";
    for (int j = 0; j < dim; ++j) {
      if (j) out += ",";
      out += format_double(coords[i * static_cast<size_t>(dim) + static_cast<size_t>(j)]);
    }
  }
  return out;
}

void reject_keys(const ConfigFile& file, const std::string& section,
                 const std::vector<std::string>& keys, const std::string& reason) {
  for (const std::string& key : keys)
    if (file.has(section, key))
      throw ConfigError(section + "." + key + " is only valid " + reason);
}

}  // namespace

// ---------------------------------------------------------------------------
// ConfigFile

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile file;
  file.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  auto fail = [&](const std::string& message) -> void {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + message);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trimmed(line.substr(1, line.size() - 2));
      if (!schema().count(section)) fail("unknown section [" + section + "]");
      if (file.sections_.count(section)) fail("section [" + section + "] appears twice");
      file.sections_[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key.empty()) fail("missing key before '='");
    if (section.empty()) fail("key '" + key + "' appears outside any section");
    if (!schema().at(section).count(key)) fail("unknown key '" + key + "' in [" + section + "]");
    auto& stored = file.sections_[section];
    if (stored.count(key)) fail("duplicate key '" + key + "' in [" + section + "]");
    stored[key] = value;
  }
  return file;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

const std::string& ConfigFile::raw(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end() || !it->second.count(key))
    throw ConfigError(origin_ + ": missing required value " + section + "." + key);
  return it->second.at(key);
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return has(section, key) ? raw(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  if (!has(section, key)) return fallback;
  return parse_double_value(raw(section, key), section + "." + key);
}

double ConfigFile::require_double(const std::string& section, const std::string& key) const {
  return parse_double_value(raw(section, key), section + "." + key);
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  const long long value = parse_integer_value(raw(section, key), section + "." + key);
  if (value < -2147483648LL || value > 2147483647LL)
    throw ConfigError(section + "." + key + ": value out of range");
  return static_cast<int>(value);
}

uint64_t ConfigFile::get_uint64(const std::string& section, const std::string& key,
                                uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const long long value = parse_integer_value(raw(section, key), section + "." + key);
  if (value < 0) throw ConfigError(section + "." + key + ": value must be nonnegative");
  return static_cast<uint64_t>(value);
}

std::vector<double> ConfigFile::require_double_list(const std::string& section,
                                                    const std::string& key) const {
  const std::string where = section + "." + key;
  std::vector<double> values;
  for (const std::string& part : split(raw(section, key), ','))
    values.push_back(parse_double_value(part, where));
  return values;
}

std::vector<double> ConfigFile::get_double_list(const std::string& section, const std::string& key,
                                                std::vector<double> fallback) const {
  if (!has(section, key)) return fallback;
  return require_double_list(section, key);
}

std::vector<size_t> ConfigFile::get_size_list(const std::string& section, const std::string& key,
                                              std::vector<size_t> fallback) const {
  if (!has(section, key)) return fallback;
  const std::string where = section + "." + key;
  std::vector<size_t> values;
  for (const std::string& part : split(raw(section, key), ',')) {
    const long long value = parse_integer_value(part, where);
    if (value < 1) throw ConfigError(where + ": entries must be positive");
    values.push_back(static_cast<size_t>(value));
  }
  return values;
}

PointSet ConfigFile::require_points(const std::string& section, const std::string& key) const {
  const std::string where = section + "." + key;
  const std::vector<std::string> rows = split(raw(section, key), ';');
  if (rows.empty()) throw ConfigError(where + ": no points given");
  int dim = 0;
  PointSet points(1);
  for (size_t i = 0; i < rows.size(); ++i) {
    const std::vector<std::string> coords = split(rows[i], ',');
    if (i == 0) {
      dim = static_cast<int>(coords.size());
      if (dim < 1 || dim > 2) throw ConfigError(where + ": points must have 1 or 2 coordinates");
      points = PointSet(dim);
    } else if (static_cast<int>(coords.size()) != dim) {
      throw ConfigError(where + ": points have inconsistent dimensions");
    }
    double p[2] = {0.0, 0.0};
    for (int j = 0; j < dim; ++j) p[j] = parse_double_value(coords[static_cast<size_t>(j)], where);
    points.append(p);
  }
  return points;
}

// ---------------------------------------------------------------------------
// Resolution

ResolvedConfig resolve_config(const ConfigFile& file) {
  ResolvedConfig cfg;

  const std::string source_kind = file.get_string("source", "kind", "uniform");
  const double gamma = file.get_double("source", "holder_gamma", 2.0);
  if (source_kind == "uniform") {
    reject_keys(file, "source", {"weights", "means", "stds", "truncation_radius"},
                "with kind = gaussian_mixture");
    const std::vector<double> lo = file.get_double_list("source", "lo", {0.0});
    const std::vector<double> hi = file.get_double_list("source", "hi", {1.0});
    if (lo.size() != hi.size())
      throw ConfigError("source.lo and source.hi must have the same length");
    try {
      cfg.source = SourceModel::uniform(Box{lo, hi}, gamma);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("source: ") + e.what());
    }
  } else if (source_kind == "gaussian_mixture") {
    reject_keys(file, "source", {"lo", "hi"}, "with kind = uniform");
    try {
      cfg.source = SourceModel::gaussian_mixture(
          file.require_double_list("source", "weights"), file.require_points("source", "means"),
          file.require_double_list("source", "stds"),
          file.require_double("source", "truncation_radius"), gamma);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("source: ") + e.what());
    }
  } else {
    throw ConfigError("source.kind must be 'uniform' or 'gaussian_mixture'");
  }
  const int dim = cfg.source.dim();

  const std::string noise_kind = file.get_string("noise", "kind", "identity");
  if (noise_kind == "identity") {
    if (file.has("noise", "sigma"))
      throw ConfigError("noise.sigma is only valid with kind = laplace");
    cfg.noise = NoiseModel::identity(dim);
  } else if (noise_kind == "laplace") {
    std::vector<double> sigmas = file.require_double_list("noise", "sigma");
    if (sigmas.size() == 1) sigmas.assign(static_cast<size_t>(dim), sigmas[0]);
    if (sigmas.size() != static_cast<size_t>(dim))
      throw ConfigError("noise.sigma must have 1 entry or one per axis");
    try {
      cfg.noise = NoiseModel::laplace(sigmas);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("noise: ") + e.what());
    }
  } else {
    throw ConfigError("noise.kind must be 'identity' or 'laplace'");
  }

  const std::string kernel_kind = file.get_string("kernel", "kind", "flat_top");
  try {
    if (kernel_kind == "sinc") {
      if (file.has("kernel", "taper_start"))
        throw ConfigError("kernel.taper_start is only valid with kind = flat_top");
      cfg.kernel = make_base_kernel(KernelKind::sinc);
    } else if (kernel_kind == "flat_top") {
      cfg.kernel =
          make_base_kernel(KernelKind::flat_top, file.get_double("kernel", "taper_start", 0.5));
    } else {
      throw ConfigError("kernel.kind must be 'sinc' or 'flat_top'");
    }
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  cfg.inversion.freq_nodes = file.get_int("kernel", "freq_nodes", cfg.inversion.freq_nodes);
  cfg.inversion.cf_floor = file.get_double("kernel", "cf_floor", cfg.inversion.cf_floor);
  cfg.inversion.imag_tol = file.get_double("kernel", "imag_tol", cfg.inversion.imag_tol);

  std::vector<size_t> nodes = file.get_size_list("grid", "nodes", {256});
  if (nodes.size() == 1) nodes.assign(static_cast<size_t>(dim), nodes[0]);
  if (nodes.size() != static_cast<size_t>(dim))
    throw ConfigError("grid.nodes must have 1 entry or one per axis");
  cfg.grid_nodes.clear();
  for (size_t count : nodes) {
    if (count < 2 || count > 1000000) throw ConfigError("grid.nodes entries must be in [2, 1e6]");
    cfg.grid_nodes.push_back(static_cast<int>(count));
  }
  cfg.margin_bandwidths = file.get_double("grid", "margin_bandwidths", cfg.margin_bandwidths);
  cfg.sample_margin_sigmas =
      file.get_double("grid", "sample_margin_sigmas", cfg.sample_margin_sigmas);
  cfg.offset_refine = file.get_int("grid", "offset_refine", cfg.offset_refine);
  if (cfg.offset_refine < 1) throw ConfigError("grid.offset_refine must be at least 1");
  if (!(cfg.margin_bandwidths >= 0.0)) throw ConfigError("grid.margin_bandwidths must be >= 0");
  if (!(cfg.sample_margin_sigmas >= 0.0))
    throw ConfigError("grid.sample_margin_sigmas must be >= 0");

  cfg.k = file.get_int("clustering", "k", cfg.k);
  if (cfg.k < 1) throw ConfigError("clustering.k must be at least 1");
  cfg.restarts = file.get_int("clustering", "restarts", cfg.restarts);
  if (cfg.restarts < 0) throw ConfigError("clustering.restarts must be nonnegative");
  cfg.lloyd.max_iters = file.get_int("clustering", "max_iters", cfg.lloyd.max_iters);
  if (cfg.lloyd.max_iters < 1) throw ConfigError("clustering.max_iters must be at least 1");
  cfg.lloyd.tol = file.get_double("clustering", "tol", cfg.lloyd.tol);
  if (!(cfg.lloyd.tol > 0.0)) throw ConfigError("clustering.tol must be positive");

  const std::string rule = file.get_string("bandwidth", "rule", "theoretical");
  if (rule == "fixed") {
    reject_keys(file, "bandwidth", {"c0"}, "with rule = theoretical");
    reject_keys(file, "bandwidth", {"candidates", "folds"}, "with rule = cv");
    std::vector<double> lambdas = file.require_double_list("bandwidth", "lambda");
    if (lambdas.size() == 1) lambdas.assign(static_cast<size_t>(dim), lambdas[0]);
    if (lambdas.size() != static_cast<size_t>(dim))
      throw ConfigError("bandwidth.lambda must have 1 entry or one per axis");
    for (double l : lambdas)
      if (!(l > 0.0)) throw ConfigError("bandwidth.lambda entries must be positive");
    cfg.rule = BandwidthRuleKind::fixed;
    cfg.fixed_lambda = lambdas;
  } else if (rule == "theoretical") {
    reject_keys(file, "bandwidth", {"lambda"}, "with rule = fixed");
    reject_keys(file, "bandwidth", {"candidates", "folds"}, "with rule = cv");
    cfg.rule = BandwidthRuleKind::theoretical;
    cfg.c0 = file.get_double("bandwidth", "c0", 1.0);
    if (!(cfg.c0 > 0.0)) throw ConfigError("bandwidth.c0 must be positive");
  } else if (rule == "cv") {
    reject_keys(file, "bandwidth", {"lambda"}, "with rule = fixed");
    cfg.rule = BandwidthRuleKind::cv;
    cfg.cv_candidates = file.require_double_list("bandwidth", "candidates");
    for (double l : cfg.cv_candidates)
      if (!(l > 0.0)) throw ConfigError("bandwidth.candidates entries must be positive");
    cfg.cv_folds = file.get_int("bandwidth", "folds", 5);
    if (cfg.cv_folds < 2) throw ConfigError("bandwidth.folds must be at least 2");
  } else {
    throw ConfigError("bandwidth.rule must be 'fixed', 'theoretical' or 'cv'");
  }

  const uint64_t n_value = file.get_uint64("experiment", "n", cfg.n);
  if (n_value < 1) throw ConfigError("experiment.n must be positive");
  cfg.n = static_cast<size_t>(n_value);
  cfg.master_seed = file.get_uint64("experiment", "master_seed", cfg.master_seed);
  cfg.sample_file = file.get_string("experiment", "sample_file", "");
  cfg.n_schedule = file.get_size_list("experiment", "n_schedule", cfg.n_schedule);
  cfg.replications = file.get_int("experiment", "replications", cfg.replications);
  if (cfg.replications < 1) throw ConfigError("experiment.replications must be at least 1");
  cfg.ref_grid_factor = file.get_int("experiment", "ref_grid_factor", cfg.ref_grid_factor);
  cfg.ref_restart_factor = file.get_int("experiment", "ref_restart_factor", cfg.ref_restart_factor);
  if (cfg.ref_grid_factor < 1 || cfg.ref_restart_factor < 1)
    throw ConfigError("experiment reference factors must be at least 1");
  cfg.threads = file.get_int("experiment", "threads", cfg.threads);
  if (cfg.threads < 1) throw ConfigError("experiment.threads must be at least 1");
  cfg.bias_lambdas = file.get_double_list("experiment", "lambdas", cfg.bias_lambdas);
  for (double l : cfg.bias_lambdas)
    if (!(l > 0.0)) throw ConfigError("experiment.lambdas entries must be positive");
  if (file.has("experiment", "codebook_a")) {
    const PointSet points = file.require_points("experiment", "codebook_a");
    cfg.bias_a = Codebook::from_flat(points.dim, points.coords);
  }
  if (file.has("experiment", "codebook_b")) {
    const PointSet points = file.require_points("experiment", "codebook_b");
    cfg.bias_b = Codebook::from_flat(points.dim, points.coords);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Echo

std::string ResolvedConfig::echo() const {
  std::string out;
  out += "[source]\n";
  if (source.kind() == SourceKind::uniform_box) {
    const Box b = source.bounding_box();
    out += "kind = uniform\n";
    out += "lo = " + join_doubles(b.lo) + "\n";
    out += "hi = " + join_doubles(b.hi) + "\n";
  } else {
    const PointSet& means = source.mixture_means();
    out += "kind = gaussian_mixture\n";
    out += "weights = " + join_doubles(source.mixture_weights()) + "\n";
    out += "means = " + join_points(means.coords.data(), means.dim, means.size()) + "\n";
    out += "stds = " + join_doubles(source.mixture_stds()) + "\n";
    out += "truncation_radius = " + format_double(source.truncation_radius()) + "\n";
  }
  out += "holder_gamma = " + format_double(source.holder_gamma()) + "\n";

  out += "\n[noise]\n";
  if (noise.pure_identity()) {
    out += "kind = identity\n";
  } else {
    std::vector<double> sigmas;
    for (int j = 0; j < noise.dim(); ++j) sigmas.push_back(noise.component(j).sigma);
    out += "kind = laplace\n";
    out += "sigma = " + join_doubles(sigmas) + "\n";
  }

  out += "\n[kernel]\n";
  if (kernel.kind == KernelKind::sinc) {
    out += "kind = sinc\n";
  } else {
    out += "kind = flat_top\n";
    out += "taper_start = " + format_double(kernel.taper_start) + "\n";
  }
  out += "freq_nodes = " + std::to_string(inversion.freq_nodes) + "\n";
  out += "cf_floor = " + format_double(inversion.cf_floor) + "\n";
  out += "imag_tol = " + format_double(inversion.imag_tol) + "\n";

  out += "\n[grid]\n";
  out += "nodes = " + join_ints(grid_nodes) + "\n";
  out += "margin_bandwidths = " + format_double(margin_bandwidths) + "\n";
  out += "sample_margin_sigmas = " + format_double(sample_margin_sigmas) + "\n";
  out += "offset_refine = " + std::to_string(offset_refine) + "\n";

  out += "\n[clustering]\n";
  out += "k = " + std::to_string(k) + "\n";
  out += "restarts = " + std::to_string(restarts) + "\n";
  out += "max_iters = " + std::to_string(lloyd.max_iters) + "\n";
  out += "tol = " + format_double(lloyd.tol) + "\n";

  out += "\n[bandwidth]\n";
  if (rule == BandwidthRuleKind::fixed) {
    out += "rule = fixed\n";
    out += "lambda = " + join_doubles(fixed_lambda) + "\n";
  } else if (rule == BandwidthRuleKind::theoretical) {
    out += "rule = theoretical\n";
    out += "c0 = " + format_double(c0) + "\n";
  } else {
    out += "rule = cv\n";
    out += "candidates = " + join_doubles(cv_candidates) + "\n";
    out += "folds = " + std::to_string(cv_folds) + "\n";
  }

  out += "\n[experiment]\n";
  out += "n = " + std::to_string(n) + "\n";
  out += "master_seed = " + std::to_string(master_seed) + "\n";
  if (!sample_file.empty()) out += "sample_file = " + sample_file + "\n";
  out += "n_schedule = " + join_sizes(n_schedule) + "\n";
  out += "replications = " + std::to_string(replications) + "\n";
  out += "ref_grid_factor = " + std::to_string(ref_grid_factor) + "\n";
  out += "ref_restart_factor = " + std::to_string(ref_restart_factor) + "\n";
  out += "threads = " + std::to_string(threads) + "\n";
  out += "lambdas = " + join_doubles(bias_lambdas) + "\n";
  if (bias_a.k > 0)
    out += "codebook_a = " + join_points(bias_a.centers.data(), bias_a.dim, bias_a.centers.size() /
                                             static_cast<size_t>(bias_a.dim)) + "\n";
  if (bias_b.k > 0)
    out += "codebook_b = " + join_points(bias_b.centers.data(), bias_b.dim, bias_b.centers.size() /
                                             static_cast<size_t>(bias_b.dim)) + "\n";
  return out;
}

}  // namespace declust
