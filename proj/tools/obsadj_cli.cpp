// Command-line front end; talks to the library only through the C API.
#include "obsadj/obsadj.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCompute = 1;
constexpr int kExitUsage = 2;

struct CliError : std::runtime_error {
  int exit_code;
  CliError(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
};

void check(oa_status s) {
  if (s == OA_OK) return;
  const bool usage = s == OA_INVALID_ARGUMENT || s == OA_DIMENSION_MISMATCH || s == OA_IO || s == OA_MISSING_TRUTH;
  throw CliError(usage ? kExitUsage : kExitCompute, std::string(oa_status_name(s)) + ": " + oa_last_error());
}

struct DatasetDeleter {
  void operator()(oa_dataset* d) const { oa_dataset_free(d); }
};
struct FitDeleter {
  void operator()(oa_fit* f) const { oa_fit_free(f); }
};
using DatasetPtr = std::unique_ptr<oa_dataset, DatasetDeleter>;
using FitPtr = std::unique_ptr<oa_fit, FitDeleter>;

std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CliError(kExitUsage, "cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Numeric CSV; a first line that does not parse as numbers is taken as a header.
std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CliError(kExitUsage, "cannot read " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok) {
      if (lineno == 1 && rows.empty()) continue;
      throw CliError(kExitUsage, path + ":" + std::to_string(lineno) + ": not a number");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw CliError(kExitUsage, path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CliError(kExitUsage, path + ": no data");
  return rows;
}

std::vector<double> read_column(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.front().size() != 1) throw CliError(kExitUsage, path + ": expected one column");
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[0]);
  return out;
}

void write_column(const fs::path& path, const std::string& name, const std::vector<double>& v) {
  std::ofstream f(path);
  if (!f) throw CliError(kExitUsage, "cannot write " + path.string());
  f << name << '\n';
  for (double x : v) f << fmt(x) << '\n';
}

void write_matrix(const fs::path& path, const std::vector<double>& rowmajor, int64_t rows, int64_t cols) {
  std::ofstream f(path);
  if (!f) throw CliError(kExitUsage, "cannot write " + path.string());
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) {
      if (j) f << ',';
      f << fmt(rowmajor[static_cast<std::size_t>(i * cols + j)]);
    }
    f << '\n';
  }
}

std::string config_text(const std::string& preset, const std::string& config_path) {
  if (!preset.empty() && !config_path.empty()) throw CliError(kExitUsage, "give either --preset or --config");
  if (!config_path.empty()) return read_file(config_path);
  if (preset.empty()) throw CliError(kExitUsage, "one of --preset or --config is required");
  const char* text = nullptr;
  check(oa_preset_json(preset.c_str(), &text));
  return text;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string x_path, y_path;
  std::string preset, config;
  bool full = false;
  int dims_index = 0, link_index = 0;
  std::optional<uint64_t> seed;
  std::string loss = "square", penalty = "none", scaling, algorithm = "auto";
  double lambda = 0.0, lambda2 = 0.0, kkt_tol = 1e-8;
  int max_iter = 100;
  std::optional<double> coercive_K;
  std::optional<double> covariance_scale;
  std::string covariance_path, index_path;
  std::string out;
};

oa_fit_options options_from(const json& j) {
  // Strings must outlive the options; callers keep `j` alive.
  oa_fit_options o;
  oa_fit_options_init(&o);
  o.loss = j.at("loss").get_ref<const std::string&>().c_str();
  o.penalty = j.at("penalty").get_ref<const std::string&>().c_str();
  if (j.contains("scaling") && j["scaling"].is_string()) o.scaling = j["scaling"].get_ref<const std::string&>().c_str();
  o.lambda = j.value("lambda", 0.0);
  o.lambda2 = j.value("lambda2", 0.0);
  o.algorithm = j.at("algorithm").get_ref<const std::string&>().c_str();
  o.kkt_tol = j.value("kkt_tol", 1e-8);
  o.max_iter = j.value("max_iter", 100);
  if (j.contains("coercive_K") && j["coercive_K"].is_number()) {
    o.use_coercive = 1;
    o.coercive_K = j["coercive_K"];
  }
  return o;
}

DatasetPtr build_dataset(const FitArgs& a) {
  oa_dataset* raw = nullptr;
  const bool simulate = !a.preset.empty() || !a.config.empty();
  if (simulate) {
    if (!a.x_path.empty() || !a.y_path.empty()) throw CliError(kExitUsage, "--x/--y cannot be combined with simulation");
    if (!a.seed) throw CliError(kExitUsage, "--seed is required with --preset or --config");
    const std::string text = config_text(a.preset, a.config);
    check(oa_dataset_simulate(text.c_str(), a.full ? 1 : 0, a.dims_index, a.link_index, *a.seed, &raw));
    return DatasetPtr(raw);
  }
  if (a.x_path.empty() || a.y_path.empty()) throw CliError(kExitUsage, "give --x and --y, or --preset/--config");
  const auto X = read_csv(a.x_path);
  const auto y = read_column(a.y_path);
  const int64_t n = static_cast<int64_t>(X.size()), p = static_cast<int64_t>(X.front().size());
  if (static_cast<int64_t>(y.size()) != n)
    throw CliError(kExitUsage, "dimension_mismatch: X has " + std::to_string(n) + " rows but y has " +
                                   std::to_string(y.size()));
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n * p));
  for (const auto& r : X) flat.insert(flat.end(), r.begin(), r.end());
  check(oa_dataset_create(flat.data(), y.data(), n, p, &raw));
  DatasetPtr ds(raw);
  if (a.covariance_scale && !a.covariance_path.empty())
    throw CliError(kExitUsage, "give at most one of --covariance-scale and --covariance");
  if (a.covariance_scale) check(oa_dataset_set_covariance_scaled(ds.get(), *a.covariance_scale));
  if (!a.covariance_path.empty()) {
    const auto S = read_csv(a.covariance_path);
    if (static_cast<int64_t>(S.size()) != p || static_cast<int64_t>(S.front().size()) != p)
      throw CliError(kExitUsage, "dimension_mismatch: covariance must be p x p");
    std::vector<double> s;
    for (const auto& r : S) s.insert(s.end(), r.begin(), r.end());
    check(oa_dataset_set_covariance(ds.get(), s.data()));
  }
  if (!a.index_path.empty()) {
    const auto w = read_column(a.index_path);
    if (static_cast<int64_t>(w.size()) != p) throw CliError(kExitUsage, "dimension_mismatch: index must have p entries");
    check(oa_dataset_set_truth(ds.get(), w.data(), nullptr));
  }
  return ds;
}

std::vector<double> copy_data(const oa_dataset* ds, oa_data_field field, int64_t len) {
  std::vector<double> v(static_cast<std::size_t>(len));
  check(oa_dataset_copy(ds, field, v.data(), len));
  return v;
}

std::vector<double> copy_fit(const oa_fit* f, oa_fit_field field, int64_t len) {
  std::vector<double> v(static_cast<std::size_t>(len));
  check(oa_fit_copy(f, field, v.data(), len));
  return v;
}

// Writes the dataset next to the fit so that infer/adjust can reload both.
void write_dataset(const oa_dataset* ds, const fs::path& dir, json& meta) {
  int64_t n = 0, p = 0;
  check(oa_dataset_dims(ds, &n, &p));
  write_matrix(dir / "X.csv", copy_data(ds, OA_DATA_X, n * p), n, p);
  write_column(dir / "y.csv", "y", copy_data(ds, OA_DATA_Y, n));
  int kind = -1;
  double scale = 0.0;
  check(oa_dataset_covariance(ds, &kind, &scale, nullptr));
  if (kind == 0) {
    meta["covariance"] = {{"kind", "scaled-identity"}, {"scale", scale}};
  } else if (kind == 1) {
    std::vector<double> S(static_cast<std::size_t>(p * p));
    check(oa_dataset_covariance(ds, &kind, nullptr, S.data()));
    write_matrix(dir / "covariance.csv", S, p, p);
    meta["covariance"] = {{"kind", "explicit"}, {"file", "covariance.csv"}};
  } else {
    meta["covariance"] = nullptr;
  }
  if (oa_dataset_has_truth(ds)) {
    write_column(dir / "index.csv", "w", copy_data(ds, OA_DATA_INDEX, p));
    meta["truth"] = {{"index", "index.csv"}};
    std::vector<double> b(static_cast<std::size_t>(p));
    if (oa_dataset_copy(ds, OA_DATA_BETA_STAR, b.data(), p) == OA_OK) {
      write_column(dir / "beta_star.csv", "beta_star", b);
      meta["truth"]["beta_star"] = "beta_star.csv";
    }
  }
  meta["n"] = n;
  meta["p"] = p;
}

int cmd_fit(const FitArgs& a) {
  if (a.out.empty()) throw CliError(kExitUsage, "--out is required");
  DatasetPtr ds = build_dataset(a);

  json options = {{"loss", a.loss},
                  {"penalty", a.penalty},
                  {"scaling", a.scaling.empty() ? json(nullptr) : json(a.scaling)},
                  {"lambda", a.lambda},
                  {"lambda2", a.lambda2},
                  {"algorithm", a.algorithm},
                  {"kkt_tol", a.kkt_tol},
                  {"max_iter", a.max_iter},
                  {"coercive_K", a.coercive_K ? json(*a.coercive_K) : json(nullptr)}};
  const oa_fit_options opts = options_from(options);

  oa_fit* raw = nullptr;
  const oa_status st = oa_fit_create(ds.get(), &opts, &raw);
  if (st == OA_SEPARABLE_DATA)
    throw CliError(kExitCompute, std::string("separable_data: ") + oa_last_error());
  check(st);
  FitPtr fit(raw);

  oa_fit_info info;
  check(oa_fit_get_info(fit.get(), &info));
  int64_t n = 0, p = 0;
  check(oa_dataset_dims(ds.get(), &n, &p));

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw CliError(kExitUsage, "cannot create " + a.out + ": " + ec.message());
  const fs::path dir(a.out);
  json meta;
  meta["options"] = options;
  if (a.seed) meta["seed"] = *a.seed;
  if (!a.preset.empty()) meta["preset"] = a.preset;
  meta["diagnostics"] = {{"objective", num(info.objective)},
                         {"kkt_residual", num(info.kkt_residual)},
                         {"converged", info.converged != 0},
                         {"guard_active", info.guard_active != 0},
                         {"iterations", info.iterations},
                         {"support_size", info.support_size}};
  write_dataset(ds.get(), dir, meta);
  write_column(dir / "beta.csv", "beta", copy_fit(fit.get(), OA_FIT_BETA, p));
  write_column(dir / "psi.csv", "psi", copy_fit(fit.get(), OA_FIT_PSI, n));
  write_column(dir / "curvature.csv", "curvature", copy_fit(fit.get(), OA_FIT_CURVATURE, n));
  {
    std::ofstream f(dir / "fit.json");
    f << meta.dump(2) << '\n';
  }
  std::cout << "fit written to " << a.out << " (kkt " << fmt(info.kkt_residual) << ", " << info.iterations
            << " iterations)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- artifacts

struct Artifact {
  json meta;
  DatasetPtr ds;
  FitPtr fit;
};

Artifact load_artifact(const std::string& dir_str) {
  const fs::path dir(dir_str);
  Artifact art;
  try {
    art.meta = json::parse(read_file((dir / "fit.json").string()));
  } catch (const json::exception& e) {
    throw CliError(kExitUsage, "fit.json: " + std::string(e.what()));
  }
  FitArgs a;
  a.x_path = (dir / "X.csv").string();
  a.y_path = (dir / "y.csv").string();
  const json& cov = art.meta["covariance"];
  if (cov.is_object()) {
    if (cov.at("kind") == "scaled-identity") a.covariance_scale = cov.at("scale").get<double>();
    else a.covariance_path = (dir / cov.at("file").get<std::string>()).string();
  }
  art.ds = build_dataset(a);
  int64_t p = 0;
  check(oa_dataset_dims(art.ds.get(), nullptr, &p));
  if (art.meta.contains("truth") && art.meta["truth"].is_object()) {
    const auto w = read_column((dir / art.meta["truth"]["index"].get<std::string>()).string());
    std::vector<double> bstar;
    if (art.meta["truth"].contains("beta_star"))
      bstar = read_column((dir / art.meta["truth"]["beta_star"].get<std::string>()).string());
    check(oa_dataset_set_truth(art.ds.get(), w.data(), bstar.empty() ? nullptr : bstar.data()));
  }
  const auto beta = read_column((dir / "beta.csv").string());
  if (static_cast<int64_t>(beta.size()) != p) throw CliError(kExitUsage, "beta.csv length differs from p");
  const oa_fit_options opts = options_from(art.meta.at("options"));
  oa_fit* raw = nullptr;
  check(oa_fit_from_beta(art.ds.get(), &opts, beta.data(), &raw));
  art.fit.reset(raw);
  return art;
}

const char* variant_arg(const std::string& v) { return v.empty() ? nullptr : v.c_str(); }

int cmd_infer(const std::string& fit_dir, double alpha, const std::string& omega, const std::string& variant,
              const std::string& out) {
  Artifact art = load_artifact(fit_dir);
  int64_t p = 0;
  check(oa_dataset_dims(art.ds.get(), nullptr, &p));
  std::vector<oa_infer_row> rows(static_cast<std::size_t>(p));
  int ci_available = 0;
  check(oa_infer(art.ds.get(), art.fit.get(), variant_arg(variant), alpha, omega.c_str(), rows.data(), p,
                 &ci_available));
  if (!ci_available)
    std::cerr << "warning: estimated signal is zero; confidence intervals are undefined, tests are reported\n";
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw CliError(kExitUsage, "cannot write " + out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os << "j,beta,beta_d,center,lo,hi,stat,reject\n";
  for (const auto& r : rows)
    os << r.j << ',' << fmt(r.beta) << ',' << fmt(r.beta_d) << ',' << fmt(r.center) << ',' << fmt(r.lo) << ','
       << fmt(r.hi) << ',' << fmt(r.stat) << ',' << r.reject << '\n';
  return kExitOk;
}

int cmd_adjust(const std::string& fit_dir, const std::string& variant, const std::string& out) {
  Artifact art = load_artifact(fit_dir);
  oa_adjustments adj;
  check(oa_adjust(art.ds.get(), art.fit.get(), variant_arg(variant), &adj));
  json j = {{"df", num(adj.df)},           {"v", num(adj.v)},         {"r2", num(adj.r2)},
            {"gamma", num(adj.gamma)},     {"t2", num(adj.t2)},       {"a2", num(adj.a2)},
            {"sigma2", num(adj.sigma2)},   {"trace_v", num(adj.trace_v)}, {"trace_d", num(adj.trace_d)},
            {"degenerate_branch", adj.degenerate_branch != 0}};
  double ss = 0.0;
  if (oa_signal_strength(art.ds.get(), art.fit.get(), variant_arg(variant), &ss) == OA_OK) j["signal_strength"] = num(ss);
  if (oa_dataset_has_truth(art.ds.get())) {
    oa_oracle o;
    check(oa_oracle_compute(art.ds.get(), art.fit.get(), &o));
    j["oracle"] = {{"a_star", num(o.a_star)},
                   {"sigma_star2", num(o.sigma_star2)},
                   {"gamma_star", num(o.gamma_star)},
                   {"t_star", num(o.t_star)}};
  }
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream f(out);
    if (!f) throw CliError(kExitUsage, "cannot write " + out);
    f << j.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_experiment(const std::string& preset, const std::string& config, bool full, std::optional<int> reps,
                   std::optional<uint64_t> seed, int workers, std::string out) {
  const std::string text = config_text(preset, config);
  if (out.empty()) {
    std::string name = preset;
    if (name.empty()) {
      try {
        name = json::parse(text).value("name", "experiment");
      } catch (const json::exception&) {
        name = "experiment";
      }
    }
    out = (fs::path("results") / name).string();
  }
  oa_experiment_options o;
  oa_experiment_options_init(&o);
  o.full = full ? 1 : 0;
  o.workers = workers;
  if (reps) {
    if (*reps < 1) throw CliError(kExitUsage, "--reps must be >= 1");
    o.reps = *reps;
  }
  if (seed) {
    o.has_seed = 1;
    o.seed = *seed;
  }
  char* summary = nullptr;
  check(oa_experiment_run(text.c_str(), &o, out.c_str(), &summary));
  const json s = json::parse(summary);
  oa_string_free(summary);
  std::cout << "experiment " << s.value("experiment", "") << " written to " << out << " (config hash "
            << s["provenance"].value("config_hash", "") << ")\n";
  for (const auto& arm : s["arms"]) {
    std::cout << "  " << arm.value("label", "") << ": " << arm.value("ok", 0) << " ok";
    if (arm.value("zero_fit", 0) > 0) std::cout << ", " << arm.value("zero_fit", 0) << " zero fits";
    if (arm.value("failed", 0) > 0) std::cout << ", " << arm.value("failed", 0) << " failed";
    std::cout << '\n';
  }
  return kExitOk;
}

int cmd_presets(const std::string& show) {
  if (!show.empty()) {
    const char* text = nullptr;
    check(oa_preset_json(show.c_str(), &text));
    std::cout << text;
    return kExitOk;
  }
  for (int i = 0; i < oa_preset_count(); ++i) {
    const char* text = nullptr;
    check(oa_preset_json(oa_preset_name(i), &text));
    std::string desc;
    try {
      desc = json::parse(text).value("description", "");
    } catch (const json::exception&) {
    }
    std::cout << oa_preset_name(i) << "\t" << desc << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observable adjustments for single-index M-estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(oa_version()));

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit an M-estimator and write the fit artifact");
  fit->add_option("--x", fa.x_path, "Design matrix CSV (n rows, p columns)");
  fit->add_option("--y", fa.y_path, "Response CSV (one column)");
  fit->add_option("--preset", fa.preset, "Simulate data from a built-in preset");
  fit->add_option("--config", fa.config, "Simulate data from an experiment config file");
  fit->add_flag("--full", fa.full, "Use the full-scale dimensions of the preset");
  fit->add_option("--dims-index", fa.dims_index, "Dimension entry of the config")->check(CLI::NonNegativeNumber);
  fit->add_option("--link-index", fa.link_index, "Link entry of the config")->check(CLI::NonNegativeNumber);
  fit->add_option("--seed", fa.seed, "Design seed for simulation");
  fit->add_option("--loss", fa.loss, "square | huber | logistic | logistic-pm | binomial:<q>");
  fit->add_option("--penalty", fa.penalty, "none | ridge | l1 | elastic-net");
  fit->add_option("--scaling", fa.scaling, "Penalty scaling convention");
  fit->add_option("--lambda", fa.lambda, "Penalty level");
  fit->add_option("--lambda2", fa.lambda2, "Elastic-net quadratic level");
  fit->add_option("--algorithm", fa.algorithm, "auto | newton | prox-gradient | coordinate-descent");
  fit->add_option("--kkt-tol", fa.kkt_tol, "Relative KKT tolerance");
  fit->add_option("--max-iter", fa.max_iter, "Outer iteration limit");
  fit->add_option("--coercive-K", fa.coercive_K, "Enable the coercive guard at this level");
  fit->add_option("--covariance-scale", fa.covariance_scale, "Known covariance c*I");
  fit->add_option("--covariance", fa.covariance_path, "Known covariance CSV (p x p)");
  fit->add_option("--index", fa.index_path, "Known index direction CSV (evaluation only)");
  fit->add_option("--out", fa.out, "Output directory")->required();

  std::string fit_dir, omega = "exact", variant, out_file;
  double alpha = 0.05;
  auto* infer = app.add_subcommand("infer", "Debiased estimates, confidence intervals and tests");
  infer->add_option("--fit", fit_dir, "Fit artifact directory")->required();
  infer->add_option("--alpha", alpha, "Level")->check(CLI::Range(0.0, 1.0));
  infer->add_option("--omega", omega, "exact | estimate");
  infer->add_option("--variant", variant, "Adjustment variant");
  infer->add_option("--out", out_file, "Output CSV (default stdout)");

  auto* adjust = app.add_subcommand("adjust", "Print the observable adjustments of a fit");
  adjust->add_option("--fit", fit_dir, "Fit artifact directory")->required();
  adjust->add_option("--variant", variant, "Adjustment variant");
  adjust->add_option("--out", out_file, "Output JSON (default stdout)");

  std::string preset, config, out_dir;
  bool full = false;
  std::optional<int> reps;
  std::optional<uint64_t> seed;
  int workers = 0;
  auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo experiment");
  exp->add_option("--preset", preset, "Built-in preset name");
  exp->add_option("--config", config, "Experiment config file (JSON)");
  exp->add_flag("--full", full, "Full-scale run");
  exp->add_option("--reps", reps, "Override the number of replications");
  exp->add_option("--seed", seed, "Override the base seed");
  exp->add_option("--workers", workers, "Worker threads (default: OBSADJ_WORKERS or all cores)")
      ->check(CLI::NonNegativeNumber);
  exp->add_option("--out", out_dir, "Output directory (default results/<name>)");

  std::string show;
  auto* presets = app.add_subcommand("presets", "List built-in experiment presets");
  presets->add_option("--show", show, "Print the JSON of one preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit) return cmd_fit(fa);
    if (*infer) return cmd_infer(fit_dir, alpha, omega, variant, out_file);
    if (*adjust) return cmd_adjust(fit_dir, variant, out_file);
    if (*exp) return cmd_experiment(preset, config, full, reps, seed, workers, out_dir);
    if (*presets) return cmd_presets(show);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCompute;
  }
  return kExitUsage;
}
