// Golden tests: the CLI must reproduce direct library results.
#include "obsadj/experiment.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace obsadj;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(OBSADJ_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t k;
  while ((k = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, k);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path tmp(const std::string& name) {
  const fs::path p = fs::path(OBSADJ_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> read_column(const fs::path& p) {
  std::ifstream in(p);
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      v.push_back(std::stod(line));
    } catch (const std::exception&) {
      // header line
    }
  }
  return v;
}

struct LibraryFit {
  Dataset data;
  FitResult fit;
};

LibraryFit library_fit(const std::string& preset, std::uint64_t seed, const Loss& loss, const Penalty& g) {
  const ExperimentConfig cfg = load_preset(preset);
  LibraryFit r{simulate_dataset(cfg, 0, 0, seed), {}};
  r.fit = fit(r.data, loss, g, SolverConfig{});
  return r;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(cli("").code == 2);
  CHECK(cli("bogus").code == 2);
  CHECK(cli("fit --preset table-ls").code == 2);                     // no --out
  CHECK(cli("fit --preset nope --out " + tmp("u1").string()).code == 2);
  CHECK(cli("fit --preset table-ls --loss hinge --out " + tmp("u2").string()).code == 2);
  CHECK(cli("infer --fit " + tmp("missing").string()).code == 2);
  CHECK(cli("experiment --preset table-ls --reps -1").code == 2);
}

TEST_CASE("presets subcommand") {
  const Run r = cli("presets");
  CHECK(r.code == 0);
  for (const auto& name : preset_names()) CHECK(r.out.find(name) != std::string::npos);
  const Run show = cli("presets --show rates");
  CHECK(show.code == 0);
  CHECK(json::parse(show.out)["name"] == "rates");
}

TEST_CASE("fit, adjust and infer reproduce the library") {
  const fs::path dir = tmp("ridge");
  const Run r = cli("fit --preset ci-coverage --seed 11 --loss logistic --penalty ridge --scaling per-p --lambda 0.1 "
                    "--out " + dir.string());
  REQUIRE(r.code == 0);
  const LibraryFit lib = library_fit("ci-coverage", 11, Loss::logistic(), Penalty::ridge(0.1, RidgeScaling::per_p));
  const std::vector<double> beta = read_column(dir / "beta.csv");
  REQUIRE(beta.size() == static_cast<std::size_t>(lib.fit.beta.size()));
  for (std::size_t j = 0; j < beta.size(); ++j) CHECK(beta[j] == lib.fit.beta(static_cast<Index>(j)));
  const json meta = json::parse(slurp(dir / "fit.json"));
  CHECK(meta["n"] == 1000);
  CHECK(meta["diagnostics"]["converged"] == true);

  const Ahat A = compute_ahat(lib.fit, lib.data);
  const Traces t = compute_traces(A, lib.fit, lib.data);
  const Adjustments adj = compute_adjustments(lib.fit, lib.data, t, Variant::general, &*lib.data.covariance);
  const Run ra = cli("adjust --fit " + dir.string());
  REQUIRE(ra.code == 0);
  const json aj = json::parse(ra.out);
  CHECK(aj["df"].get<double>() == doctest::Approx(adj.df).epsilon(1e-12));
  CHECK(aj["a2"].get<double>() == doctest::Approx(adj.a2).epsilon(1e-12));
  CHECK(aj["t2"].get<double>() == doctest::Approx(adj.t2).epsilon(1e-12));
  CHECK(aj["signal_strength"].get<double>() == doctest::Approx(signal_strength(adj)).epsilon(1e-12));
  const OracleQuantities o = compute_oracle(lib.fit, lib.data, A, t);
  CHECK(aj["oracle"]["a_star"].get<double>() == doctest::Approx(o.a_star).epsilon(1e-12));

  const Run ri = cli("infer --fit " + dir.string() + " --alpha 0.05");
  REQUIRE(ri.code == 0);
  std::istringstream rows(ri.out);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "j,beta,beta_d,center,lo,hi,stat,reject");
  const Vec bd = debias(lib.fit, lib.data, adj, *lib.data.covariance);
  const Vec omega = omega_diag(lib.data, OmegaSource::exact);
  const auto ci = confidence_intervals(bd, adj, 0.05, omega, lib.data.n());
  Index count = 0;
  while (std::getline(rows, line)) {
    std::vector<double> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
    REQUIRE(f.size() == 8);
    const Index j = static_cast<Index>(f[0]);
    CHECK(f[2] == doctest::Approx(bd(j)).epsilon(1e-12));
    CHECK(f[4] == doctest::Approx(ci[j].lo).epsilon(1e-12));
    CHECK(f[5] == doctest::Approx(ci[j].hi).epsilon(1e-12));
    CHECK((f[7] == 1.0) == test_null(bd(j), adj, 0.05, omega(j), lib.data.n()).reject);
    ++count;
  }
  CHECK(count == 500);
}

TEST_CASE("fit from CSV files") {
  const fs::path src = tmp("csv_src");
  REQUIRE(cli("fit --preset table-ls --seed 3 --loss square --out " + src.string()).code == 0);
  const fs::path dir = tmp("csv_fit");
  const Run r = cli("fit --x " + (src / "X.csv").string() + " --y " + (src / "y.csv").string() +
                    " --loss square --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(read_column(dir / "beta.csv") == read_column(src / "beta.csv"));
  // Without a covariance the adjustments still work for unpenalized fits.
  CHECK(cli("adjust --fit " + dir.string()).code == 0);
}

TEST_CASE("separable data exits with a compute failure") {
  const fs::path src = tmp("sep_src");
  REQUIRE(cli("fit --preset table-ls --seed 3 --loss square --out " + src.string()).code == 0);
  // Labels from the sign of the first column are linearly separable.
  std::ifstream xin(src / "X.csv");
  std::ofstream yout(src / "ysep.csv");
  std::string line;
  int rows = 0;
  while (std::getline(xin, line) && rows < 100) {
    if (line.empty() || !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-')) continue;
    yout << (std::stod(line.substr(0, line.find(','))) > 0 ? 1 : 0) << "\n";
    ++rows;
  }
  yout.close();
  // Keep the first 100 rows and 5 columns of X.
  std::ifstream xin2(src / "X.csv");
  std::ofstream xout(src / "Xsep.csv");
  rows = 0;
  while (std::getline(xin2, line) && rows < 100) {
    if (line.empty() || !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-')) continue;
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < 5 && std::getline(ss, cell, ','); ++c) xout << (c ? "," : "") << cell;
    xout << "\n";
    ++rows;
  }
  xout.close();
  const std::string base = "fit --x " + (src / "Xsep.csv").string() + " --y " + (src / "ysep.csv").string() +
                           " --loss logistic --out ";
  CHECK(cli(base + tmp("sep_plain").string()).code == 1);
  const fs::path guarded = tmp("sep_guard");
  REQUIRE(cli(base + guarded.string() + " --coercive-K 5").code == 0);
  CHECK(json::parse(slurp(guarded / "fit.json"))["diagnostics"]["guard_active"] == true);
}

TEST_CASE("experiment outputs match the library") {
  const fs::path dir = tmp("exp");
  const fs::path cfgfile = tmp("exp.json");
  const std::string cfg = R"({"name": "golden", "seed": 8, "reps": 3, "dims": [{"n": 150, "p": 60}],
    "covariance": {"kind": "identity", "scale": "inverse-p"}, "index": {"kind": "equal-sparse", "nonzeros": 6},
    "links": [{"kind": "logistic", "signal": 2.0}], "loss": "logistic",
    "penalty": {"kind": "ridge", "scaling": "per-p"}, "lambdas": [0.5],
    "variant": "general", "outputs": {"pivot": "general", "ci": true}})";
  std::ofstream(cfgfile) << cfg;
  const Run r = cli("experiment --config " + cfgfile.string() + " --workers 2 --out " + dir.string());
  REQUIRE(r.code == 0);
  const ExperimentResult lib = run_experiment(parse_config(cfg));
  CHECK(json::parse(slurp(dir / "summary.json")) == summarize(lib));
  std::string expected = std::string(kRecordHeader) + "\n";
  for (const auto& rec : lib.records) expected += record_csv_row("golden/logistic", rec) + "\n";
  CHECK(slurp(dir / "records.csv") == expected);
  // --reps and --seed override the file.
  const fs::path dir2 = tmp("exp2");
  REQUIRE(cli("experiment --config " + cfgfile.string() + " --reps 2 --seed 9 --out " + dir2.string()).code == 0);
  const json s2 = json::parse(slurp(dir2 / "summary.json"));
  CHECK(s2["provenance"]["reps"] == 2);
  CHECK(s2["provenance"]["seed"] == 9);
}
