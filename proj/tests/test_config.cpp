#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "declust/config.hpp"
#include "doctest.h"

using namespace declust;

namespace {

const char* kMixtureConfig =
    "[source]\n"
    "kind = gaussian_mixture\n"
    "weights = 1,1\n"
    "means = -1;1\n"
    "stds = 0.25,0.25\n"
    "truncation_radius = 2.5\n"
    "\n"
    "[noise]\n"
    "kind = laplace\n"
    "sigma = 0.3\n"
    "\n"
    "[bandwidth]\n"
    "rule = theoretical\n"
    "c0 = 1.5\n";

}  // namespace

TEST_CASE("defaults materialize from an empty config") {
  const ResolvedConfig cfg = resolve_config(ConfigFile::parse_string(""));
  CHECK(cfg.source.kind() == SourceKind::uniform_box);
  CHECK(cfg.source.dim() == 1);
  CHECK(cfg.noise.pure_identity());
  CHECK(cfg.kernel.kind == KernelKind::flat_top);
  CHECK(cfg.kernel.taper_start == 0.5);
  CHECK(cfg.inversion.freq_nodes == 4096);
  CHECK(cfg.grid_nodes == std::vector<int>{256});
  CHECK(cfg.k == 2);
  CHECK(cfg.restarts == 8);
  CHECK(cfg.rule == BandwidthRuleKind::theoretical);
  CHECK(cfg.c0 == 1.0);
  CHECK(cfg.n == 1000);
  CHECK(cfg.master_seed == 1);
  CHECK(cfg.replications == 100);
  CHECK(cfg.n_schedule == std::vector<size_t>{250, 500, 1000, 2000, 4000, 8000});
}

TEST_CASE("mixture config resolves into a mixture source") {
  const ResolvedConfig cfg = resolve_config(ConfigFile::parse_string(kMixtureConfig));
  CHECK(cfg.source.kind() == SourceKind::gaussian_mixture);
  CHECK(cfg.source.truncation_radius() == 2.5);
  CHECK(cfg.source.mixture_weights() == std::vector<double>{0.5, 0.5});
  CHECK(cfg.noise.beta_bar() == 2.0);
  CHECK(cfg.noise.component(0).sigma == 0.3);
  CHECK(cfg.c0 == 1.5);
}

TEST_CASE("comments and whitespace are tolerated") {
  const ConfigFile file = ConfigFile::parse_string(
      "# leading comment\n"
      "[clustering]  # trailing comment\n"
      "  k =  3  # another\n"
      "\n");
  CHECK(resolve_config(file).k == 3);
}

TEST_CASE("strict parsing rejects malformed input") {
  CHECK_THROWS_AS(ConfigFile::parse_string("[nosuch]\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[clustering]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[clustering]\nk = 2\nk = 3\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[clustering]\nk\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("k = 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[clustering\nk = 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[clustering]\n[clustering]\n"), ConfigError);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[clustering]\nk = x\n")), ConfigError);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[clustering]\nk = 2.5\n")), ConfigError);
}

TEST_CASE("cross-field validation") {
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[source]\nkind = gaussian_mixture\n")),
                  ConfigError);
  CHECK_THROWS_AS(
      resolve_config(ConfigFile::parse_string("[source]\nkind = uniform\nweights = 1\n")),
      ConfigError);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[noise]\nsigma = 0.2\n")), ConfigError);
  CHECK_THROWS_AS(
      resolve_config(ConfigFile::parse_string("[kernel]\nkind = sinc\ntaper_start = 0.4\n")),
      ConfigError);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[bandwidth]\nlambda = 0.2\n")),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[bandwidth]\nrule = cv\n")), ConfigError);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[source]\nlo = 0,0\nhi = 1\n")),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[clustering]\nk = 0\n")), ConfigError);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[grid]\nnodes = 1\n")), ConfigError);
}

TEST_CASE("point lists parse with dimension checks") {
  const ConfigFile file = ConfigFile::parse_string("[experiment]\ncodebook_a = 0,0;1,1\n");
  const ResolvedConfig cfg = resolve_config(file);
  CHECK(cfg.bias_a.k == 2);
  CHECK(cfg.bias_a.dim == 2);
  CHECK(cfg.bias_a.at(1, 1) == 1.0);
  CHECK_THROWS_AS(resolve_config(ConfigFile::parse_string("[experiment]\ncodebook_a = 0;1,1\n")),
                  ConfigError);
}

TEST_CASE("per-axis broadcast for sigma, nodes and lambda") {
  const ResolvedConfig cfg = resolve_config(ConfigFile::parse_string(
      "[source]\nlo = 0,0\nhi = 1,1\n[noise]\nkind = laplace\nsigma = 0.2\n"
      "[grid]\nnodes = 32\n[bandwidth]\nrule = fixed\nlambda = 0.3\n"));
  CHECK(cfg.noise.dim() == 2);
  CHECK(cfg.noise.component(1).sigma == 0.2);
  CHECK(cfg.grid_nodes == std::vector<int>({32, 32}));
  CHECK(cfg.fixed_lambda == std::vector<double>({0.3, 0.3}));
  CHECK_THROWS_AS(
      resolve_config(ConfigFile::parse_string(
          "[source]\nlo = 0,0\nhi = 1,1\n[noise]\nkind = laplace\nsigma = 0.2,0.3,0.4\n")),
      ConfigError);
}

TEST_CASE("echo is stable under a parse round trip") {
  const ResolvedConfig first = resolve_config(ConfigFile::parse_string(kMixtureConfig));
  const std::string echoed = first.echo();
  const ResolvedConfig second = resolve_config(ConfigFile::parse_string(echoed));
  CHECK(second.echo() == echoed);
  CHECK(echoed.find("kind = gaussian_mixture") != std::string::npos);
  CHECK(echoed.find("master_seed = 1") != std::string::npos);
  CHECK(echoed.find("rule = theoretical") != std::string::npos);
}

TEST_CASE("master seed and sample file flow through") {
  const ResolvedConfig cfg = resolve_config(ConfigFile::parse_string(
      "[experiment]\nmaster_seed = 99\nsample_file = /tmp/points.txt\n"));
  CHECK(cfg.master_seed == 99);
  CHECK(cfg.sample_file == "/tmp/points.txt");
  CHECK(cfg.echo().find("sample_file = /tmp/points.txt") != std::string::npos);
}
