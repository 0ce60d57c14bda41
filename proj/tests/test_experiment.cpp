#include "obsadj/experiment.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

using namespace obsadj;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "name": "small",
    "seed": 99,
    "reps": 4,
    "dims": [{"n": 120, "p": 60}, {"n": 160, "p": 60}],
    "covariance": {"kind": "identity", "scale": "inverse-p"},
    "index": {"kind": "equal-sparse", "nonzeros": 6},
    "links": [{"kind": "logistic", "signal": 2.0}, {"kind": "binomial", "trials": 3, "signal": 1.0}],
    "loss": "match-link",
    "penalty": {"kind": "ridge", "scaling": "per-p"},
    "lambdas": [0.5, 2.0],
    "variant": "general",
    "outputs": {"pivot": "general", "ci": true, "qq": true}
  })");
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("every preset parses at both scales") {
  const auto names = preset_names();
  CHECK(names.size() == 6);
  for (const auto& name : names) {
    CAPTURE(name);
    const ExperimentConfig reduced = load_preset(name);
    const ExperimentConfig full = load_preset(name, true);
    CHECK(reduced.name == name);
    CHECK(reduced.source["scale"] == "reduced");
    CHECK(full.source["scale"] == "full");
    CHECK_FALSE(reduced.dims.empty());
    CHECK_FALSE(reduced.lambdas.empty());
  }
  const ExperimentConfig ls = load_preset("table-ls", true);
  CHECK(ls.reps == 100);
  CHECK(ls.dims[0].n == 3000);
  CHECK(ls.dims[0].p == 2400);
  CHECK(ls.links.size() == 4);
  CHECK_THROWS_AS(load_preset("nope"), Error);
}

TEST_CASE("config validation reports every problem at once") {
  json j = small_config();
  j.erase("seed");
  j["reps"] = 0;
  j["penalty"].erase("scaling");
  j["links"][0]["kind"] = "probit";
  try {
    parse_config(j.dump());
    FAIL("expected a validation error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(e.code() == ErrorCode::invalid_argument);
    CHECK(msg.find("seed") != std::string::npos);
    CHECK(msg.find("reps") != std::string::npos);
    CHECK(msg.find("scaling") != std::string::npos);
    CHECK(msg.find("probit") != std::string::npos);
  }
  json k = small_config();
  k["penalty"]["kind"] = "separable";
  CHECK_THROWS_AS(parse_config(k.dump()), Error);
  CHECK_THROWS_AS(parse_config("{not json"), Error);
}

TEST_CASE("lambda grid and covariance recipes") {
  json j = small_config();
  j.erase("lambdas");
  j["lambda_grid"] = {{"lo", 0.1}, {"hi", 10.0}, {"points", 3}};
  const ExperimentConfig c = parse_config(j.dump());
  REQUIRE(c.lambdas.size() == 3);
  CHECK(c.lambdas[1] == doctest::Approx(1.0));
  CHECK(c.covariance.build({100, 50}).scale() == doctest::Approx(0.02));
  CHECK(c.index.count(60) == 6);
  CHECK(c.loss_for(c.links[1]).trials() == 3);
  CHECK(c.penalty_for(2.0).lambda == 2.0);
}

TEST_CASE("runs are deterministic and independent of the worker count") {
  const ExperimentConfig c = parse_config(small_config().dump());
  RunOptions one, three;
  one.workers = 1;
  three.workers = 3;
  const ExperimentResult a = run_experiment(c, one);
  const ExperimentResult b = run_experiment(c, three);
  REQUIRE(a.records.size() == 2u * 2u * 2u * 4u);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i)
    CHECK(record_csv_row("x", a.records[i]) == record_csv_row("x", b.records[i]));
  CHECK(summarize(a).dump() == summarize(b).dump());
  for (const auto& r : a.records) CHECK(r.usable());

  // Replication seeds reproduce a record's dataset.
  const ReplicationRecord& r0 = a.records.front();
  CHECK(r0.seed == replication_seed(c, 0, r0.rep));
  const Dataset d = simulate_dataset(c, 0, 0, r0.seed);
  const FitResult f = fit(d, c.loss_for(c.links[0]), c.penalty_for(a.arms[r0.arm].lambda), c.solver);
  CHECK(r0.support_size == static_cast<double>(f.active.size()));
  const Ahat A = compute_ahat(f, d);
  const OracleQuantities o = compute_oracle(f, d, A, compute_traces(A, f, d));
  CHECK(r0.a_star == doctest::Approx(o.a_star).epsilon(1e-12));
}

TEST_CASE("overrides and the config hash") {
  const ExperimentConfig c = parse_config(small_config().dump());
  RunOptions o;
  o.reps = 2;
  o.seed = 5;
  const ExperimentResult r = run_experiment(c, o);
  CHECK(r.records.size() == 16u);
  CHECK(r.config.seed == 5u);
  CHECK(config_hash(r.config) != config_hash(c));
  CHECK(config_hash(c) == config_hash(parse_config(small_config().dump())));
  CHECK(config_hash(c).size() == 16u);
}

TEST_CASE("summaries do not depend on record order") {
  const ExperimentConfig c = parse_config(small_config().dump());
  ExperimentResult r = run_experiment(c);
  const std::string before = summarize(r).dump();
  std::mt19937 g(3);
  std::shuffle(r.records.begin(), r.records.end(), g);
  CHECK(summarize(r).dump() == before);
  const json s = json::parse(before);
  CHECK(s["provenance"]["seed"] == 99);
  CHECK(s["arms"].size() == 8u);
  CHECK(s["arms"][0]["stats"]["coverage_null"]["count"] == 4);
}

TEST_CASE("zero fits are counted, not averaged") {
  json j = small_config();
  j["penalty"] = {{"kind", "l1"}, {"scaling", "plain"}};
  j["lambdas"] = {100.0};
  j["outputs"] = {{"pivot", "none"}};
  j["dims"] = json::array({{{"n", 120}, {"p", 60}}});
  const ExperimentResult r = run_experiment(parse_config(j.dump()));
  const json s = summarize(r);
  for (const auto& arm : s["arms"]) {
    CHECK(arm["zero_fit"] == 4);
    CHECK(arm["ok"] == 0);
  }
}

TEST_CASE("outputs on disk") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "obsadj_test_outputs";
  std::filesystem::remove_all(dir);
  const ExperimentConfig c = parse_config(small_config().dump());
  const ExperimentResult r = run_experiment(c);
  write_outputs(r, summarize(r), dir.string());
  const std::string records = read_file(dir / "records.csv");
  CHECK(records.rfind(kRecordHeader, 0) == 0);
  CHECK(std::count(records.begin(), records.end(), '\n') == 1 + 32);
  CHECK(json::parse(read_file(dir / "summary.json"))["arms"].size() == 8u);
  CHECK(json::parse(read_file(dir / "config.json"))["name"] == "small");
  CHECK(std::filesystem::exists(dir / "status.csv"));
  const std::string qq = read_file(dir / "qq" / "arm0_null.csv");
  CHECK(qq.rfind("theoretical_quantile,empirical_quantile", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  setenv("OBSADJ_WORKERS", "2", 1);
  CHECK(resolve_workers(0) == 2);
  unsetenv("OBSADJ_WORKERS");
  CHECK(resolve_workers(0) >= 1);
}
