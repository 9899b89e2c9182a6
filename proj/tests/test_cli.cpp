#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = 0;
  std::string err;
};

fs::path workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("volcurve_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run run(const std::string& args) {
  const fs::path err = workdir() / "stderr.txt";
  const std::string cmd = std::string(VOLCURVE_BIN) + " " + args + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(raw), ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("simulate, fit, curve, or") {
  const fs::path d = workdir();
  REQUIRE(run("simulate --providers 60 --seed 5 --out " + (d / "p.csv").string()).status == 0);
  {
    std::ofstream spec(d / "spec.json");
    spec << R"({"linear_terms":["x1","x2"],"smooth_terms":[{"covariate":"volume"}]})";
  }
  const Run fit = run("fit --patients " + (d / "p.csv").string() + " --spec " + (d / "spec.json").string() +
                      " --out " + (d / "fit.json").string());
  REQUIRE(fit.status == 0);
  const auto j = nlohmann::json::parse(slurp(d / "fit.json"));
  CHECK(j.at("format") == "volcurve-fit");
  CHECK(j.at("covariance").at("dim") == j.at("theta").size());
  CHECK(j.contains("tau_test"));
  CHECK(j.contains("mor"));
  CHECK(j.at("smooth_tests").contains("volume"));

  REQUIRE(run("curve --fit " + (d / "fit.json").string() + " --grid-size 37 --seed 3 --out " +
              (d / "curve.csv").string())
              .status == 0);
  const std::string curve = slurp(d / "curve.csv");
  CHECK(count_lines(curve) == 37 + 2);
  CHECK(curve.find("\nv,f_hat,se,band_lo,band_hi,plus_tau,minus_tau\n") != std::string::npos);
  CHECK(curve.find("seed=3") != std::string::npos);
  const std::string prob = slurp(d / "curve_probability.csv");
  CHECK(count_lines(prob) == 37 + 2);
  CHECK(prob.find("\nv,pi_star,band_lo,band_hi,plus_tau,minus_tau\n") != std::string::npos);
  CHECK(slurp(d / "curve_histogram.csv").rfind("v,count\n", 0) == 0);

  // same seed, same band
  REQUIRE(run("curve --fit " + (d / "fit.json").string() + " --grid-size 37 --seed 3 --out " +
              (d / "curve2.csv").string())
              .status == 0);
  CHECK(slurp(d / "curve2.csv") == curve);

  REQUIRE(run("or --fit " + (d / "fit.json").string() + " --pairs 90:100,95:95 --out " +
              (d / "or.json").string())
              .status == 0);
  const auto ors = nlohmann::json::parse(slurp(d / "or.json"));
  REQUIRE(ors.size() == 2);
  CHECK(ors[1].at("or_hat") == 1.0);
  CHECK(ors[0].at("ci_lower") <= ors[0].at("or_hat"));
}

TEST_CASE("errors are reported as json") {
  const fs::path d = workdir();
  {
    std::ofstream bad(d / "bad.csv");
    bad << "provider_id,year,outcome\nA,1,7\n";
  }
  const Run r = run("fit --patients " + (d / "bad.csv").string());
  CHECK(r.status != 0);
  const auto j = nlohmann::json::parse(r.err.substr(r.err.find('{')));
  CHECK(j.at("error").at("code") == "parse_error");
  CHECK(j.at("error").at("message").get<std::string>().find(":2:") != std::string::npos);

  const Run unknown = run("curve --bogus");
  CHECK(unknown.status != 0);
  CHECK(nlohmann::json::parse(unknown.err).at("error").at("code") == "invalid_argument");

  const Run alpha = run("curve --alpha 1.5 --fit " + (d / "fit.json").string());
  CHECK(alpha.status != 0);
  CHECK(alpha.err.find("invalid_argument") != std::string::npos);

  CHECK(run("").status != 0);
}

TEST_CASE("multi-year simulation with cumulative volumes") {
  const fs::path d = workdir();
  REQUIRE(run("simulate --multi-year --providers 30 --seed 2 --out " + (d / "my.csv").string() +
              " --volumes-out " + (d / "myv.csv").string())
              .status == 0);
  {
    std::ofstream spec(d / "myspec.json");
    spec << R"({"linear_terms":["x1","x2"],"smooth_terms":[{"covariate":"volume","n_basis":6}],
               "year_intercepts":true})";
  }
  const Run fit = run("fit --patients " + (d / "my.csv").string() + " --volumes " + (d / "myv.csv").string() +
                      " --spec " + (d / "myspec.json").string() + " --volume-mode cumulative --out " +
                      (d / "myfit.json").string());
  REQUIRE(fit.status == 0);
  const auto j = nlohmann::json::parse(slurp(d / "myfit.json"));
  CHECK(j.at("spec").at("volume_mode") == "cumulative");
  CHECK(j.at("years").size() == 5);

  const Run missing = run("fit --patients " + (d / "my.csv").string() + " --spec " +
                          (d / "myspec.json").string() + " --volume-mode cumulative");
  CHECK(missing.status != 0);
}
