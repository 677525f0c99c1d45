#pragma once

#include <map>
#include <string>
#include <vector>

#include "declust/experiments.hpp"

namespace declust {

// Strict INI-style configuration file: [section] headers, key = value lines,
// '#' comments. Unknown sections or keys, duplicates, and malformed lines are
// rejected up front with the offending line quoted.
class ConfigFile {
public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin = "<config>");

  bool has(const std::string& section, const std::string& key) const;
  const std::string& raw(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  double require_double(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  uint64_t get_uint64(const std::string& section, const std::string& key, uint64_t fallback) const;

  /// Comma-separated doubles.
  std::vector<double> require_double_list(const std::string& section, const std::string& key) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      std::vector<double> fallback) const;
  /// Comma-separated positive integers.
  std::vector<size_t> get_size_list(const std::string& section, const std::string& key,
                                    std::vector<size_t> fallback) const;
  /// Semicolon-separated points with comma-separated coordinates, e.g.
  /// "-1;1" in one dimension or "0,0;1,1" in two.
  PointSet require_points(const std::string& section, const std::string& key) const;

private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

enum class BandwidthRuleKind { fixed, theoretical, cv };

// Every knob materialized, defaults filled in. echo() renders the whole
// thing back as INI text so a run's inputs are reproducible byte for byte.
struct ResolvedConfig {
  SourceModel source = SourceModel::uniform(Box{{0.0}, {1.0}});
  NoiseModel noise = NoiseModel::identity(1);
  BaseKernel kernel = make_base_kernel(KernelKind::flat_top);
  InversionOptions inversion;

  std::vector<int> grid_nodes = {256};
  double margin_bandwidths = 3.0;
  double sample_margin_sigmas = 40.0;
  int offset_refine = 2;

  int k = 2;
  int restarts = 8;
  LloydOptions lloyd;

  BandwidthRuleKind rule = BandwidthRuleKind::theoretical;
  std::vector<double> fixed_lambda;
  double c0 = 1.0;
  std::vector<double> cv_candidates;
  int cv_folds = 5;

  size_t n = 1000;
  uint64_t master_seed = 1;
  std::string sample_file;  // empty means generate the sample
  std::vector<size_t> n_schedule = {250, 500, 1000, 2000, 4000, 8000};
  int replications = 100;
  int ref_grid_factor = 2;
  int ref_restart_factor = 8;
  int threads = 1;
  std::vector<double> bias_lambdas = {0.4, 0.2, 0.1};
  Codebook bias_a{1, 0};  // empty until configured
  Codebook bias_b{1, 0};

  std::string echo() const;
};

ResolvedConfig resolve_config(const ConfigFile& file);

}  // namespace declust
