#include "obsadj/experiment.hpp"

#include "obsadj/random.hpp"
#include "obsadj/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace obsadj {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class FieldErrors {
 public:
  void add(const std::string& msg) { errors_.push_back(msg); }
  void raise_if_any() const {
    if (errors_.empty()) return;
    std::string all = "invalid experiment config:";
    for (const auto& e : errors_) all += "\n  - " + e;
    fail(ErrorCode::invalid_argument, all);
  }

 private:
  std::vector<std::string> errors_;
};

template <typename T>
std::optional<T> get_opt(const json& j, const std::string& key, const std::string& where, FieldErrors& errs) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    errs.add(where + key + ": wrong type");
    return std::nullopt;
  }
}

template <typename T>
T get_req(const json& j, const std::string& key, const std::string& where, FieldErrors& errs, T fallback) {
  auto v = get_opt<T>(j, key, where, errs);
  if (!v) {
    if (!j.is_object() || !j.contains(key)) errs.add(where + key + ": required");
    return fallback;
  }
  return *v;
}

LinkSpec parse_link(const json& j, const std::string& where, FieldErrors& errs) {
  const std::string kind = get_req<std::string>(j, "kind", where, errs, "");
  LinkSpec l;
  const double signal = get_opt<double>(j, "signal", where, errs).value_or(1.0);
  if (kind == "linear") {
    const std::string noise = get_opt<std::string>(j, "noise", where, errs).value_or("gaussian");
    if (noise == "cauchy") {
      l = LinkSpec::linear_cauchy(signal);
    } else if (noise == "gaussian") {
      l = LinkSpec::linear(signal, get_req<double>(j, "sigma", where, errs, 1.0));
    } else {
      errs.add(where + "noise: expected gaussian or cauchy");
    }
  } else if (kind == "logistic") {
    const std::string coding = get_opt<std::string>(j, "coding", where, errs).value_or("zero-one");
    if (coding != "zero-one" && coding != "plus-minus") errs.add(where + "coding: expected zero-one or plus-minus");
    l = LinkSpec::logistic(signal, coding == "plus-minus" ? LabelCoding::plus_minus : LabelCoding::zero_one);
  } else if (kind == "one-bit") {
    l = LinkSpec::one_bit(get_req<double>(j, "flip", where, errs, 0.0));
  } else if (kind == "poisson") {
    l = LinkSpec::poisson(signal);
  } else if (kind == "binomial") {
    l = LinkSpec::binomial(get_req<int>(j, "trials", where, errs, 1), signal);
  } else {
    errs.add(where + "kind: unknown link '" + kind + "'");
    return l;
  }
  try {
    l.validate();
  } catch (const Error& e) {
    errs.add(where + e.what());
  }
  return l;
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}


}  // namespace

// ---------------------------------------------------------------- recipes

Covariance CovarianceRecipe::build(const Dims& d) const {
  double c = scale;
  if (scale_kind == CovarianceScale::inverse_p) c = 1.0 / static_cast<double>(d.p);
  if (scale_kind == CovarianceScale::inverse_n) c = 1.0 / static_cast<double>(d.n);
  if (kind == "ar1") {
    Covariance base = Covariance::ar1(d.p, rho);
    if (c == 1.0) return base;
    return Covariance::explicit_matrix(c * base.dense());
  }
  return Covariance::identity_scaled(d.p, c);
}

Index IndexRecipe::count(Index p) const {
  if (kind == "dense") return p;
  Index k = 1;
  if (nonzeros) k = *nonzeros;
  else if (fraction) k = static_cast<Index>(std::llround(*fraction * static_cast<double>(p)));
  return std::clamp<Index>(k, 1, p);
}

Vec IndexRecipe::build(Index p) const {
  if (kind == "dense") return Vec::Ones(p);
  if (kind == "equispaced-sparse") return equispaced_sparse(p, count(p), lo, hi);
  return equal_sparse(p, count(p));
}

Loss ExperimentConfig::loss_for(const LinkSpec& link) const {
  if (loss != "match-link") return Loss::parse(loss);
  switch (link.kind) {
    case LinkKind::binomial: return Loss::binomial(link.trials);
    case LinkKind::logistic: return Loss::logistic(link.coding);
    case LinkKind::one_bit: return Loss::logistic(LabelCoding::plus_minus);
    default: return Loss::square();
  }
}

Penalty ExperimentConfig::penalty_for(double lambda) const {
  Penalty g = penalty;
  if (g.kind != PenaltyKind::none) g.lambda = lambda;
  g.validate();
  return g;
}

// ---------------------------------------------------------------- parsing

ExperimentConfig parse_config(const std::string& json_text, bool full) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::invalid_argument, "config must be a JSON object");
  if (full && j.contains("full")) j.merge_patch(j["full"]);
  j.erase("full");
  j["scale"] = full ? "full" : "reduced";

  FieldErrors errs;
  ExperimentConfig c;
  c.name = get_req<std::string>(j, "name", "", errs, "");
  c.description = get_opt<std::string>(j, "description", "", errs).value_or("");
  c.seed = get_req<std::uint64_t>(j, "seed", "", errs, 0);
  c.reps = get_req<int>(j, "reps", "", errs, 1);
  if (c.reps < 1) errs.add("reps: must be >= 1");

  if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].empty()) {
    errs.add("dims: required non-empty list of {n, p}");
  } else {
    for (std::size_t k = 0; k < j["dims"].size(); ++k) {
      const std::string w = "dims[" + std::to_string(k) + "].";
      Dims d{get_req<Index>(j["dims"][k], "n", w, errs, 0), get_req<Index>(j["dims"][k], "p", w, errs, 0)};
      if (d.n < 2 || d.p < 1) errs.add(w + "n/p: must be positive");
      c.dims.push_back(d);
    }
  }

  const json cov = j.value("covariance", json::object());
  c.covariance.kind = get_opt<std::string>(cov, "kind", "covariance.", errs).value_or("identity");
  if (c.covariance.kind != "identity" && c.covariance.kind != "ar1")
    errs.add("covariance.kind: expected identity or ar1");
  if (cov.contains("scale")) {
    if (cov["scale"].is_string()) {
      const std::string s = cov["scale"];
      if (s == "inverse-p") c.covariance.scale_kind = CovarianceScale::inverse_p;
      else if (s == "inverse-n") c.covariance.scale_kind = CovarianceScale::inverse_n;
      else errs.add("covariance.scale: expected a number, inverse-p or inverse-n");
    } else if (cov["scale"].is_number()) {
      c.covariance.scale = cov["scale"];
      if (!(c.covariance.scale > 0)) errs.add("covariance.scale: must be positive");
    } else {
      errs.add("covariance.scale: wrong type");
    }
  }
  if (c.covariance.kind == "ar1") c.covariance.rho = get_req<double>(cov, "rho", "covariance.", errs, 0.0);

  if (!j.contains("index")) {
    errs.add("index: required");
  } else {
    const json& ix = j["index"];
    c.index.kind = get_req<std::string>(ix, "kind", "index.", errs, "equal-sparse");
    if (c.index.kind != "equal-sparse" && c.index.kind != "equispaced-sparse" && c.index.kind != "dense")
      errs.add("index.kind: expected equal-sparse, equispaced-sparse or dense");
    c.index.nonzeros = get_opt<Index>(ix, "nonzeros", "index.", errs);
    c.index.fraction = get_opt<double>(ix, "fraction", "index.", errs);
    if (c.index.kind != "dense" && !c.index.nonzeros && !c.index.fraction)
      errs.add("index: one of nonzeros or fraction is required");
    c.index.lo = get_opt<double>(ix, "lo", "index.", errs).value_or(0.5);
    c.index.hi = get_opt<double>(ix, "hi", "index.", errs).value_or(4.0);
  }

  if (!j.contains("links") || !j["links"].is_array() || j["links"].empty()) {
    errs.add("links: required non-empty list");
  } else {
    for (std::size_t k = 0; k < j["links"].size(); ++k)
      c.links.push_back(parse_link(j["links"][k], "links[" + std::to_string(k) + "].", errs));
  }

  c.loss = get_req<std::string>(j, "loss", "", errs, "square");
  if (c.loss != "match-link") {
    try {
      Loss::parse(c.loss);
    } catch (const Error& e) {
      errs.add(std::string("loss: ") + e.what());
    }
  }

  if (!j.contains("penalty") || !j["penalty"].is_object()) {
    errs.add("penalty: required object");
  } else {
    const json& pj = j["penalty"];
    try {
      c.penalty.kind = parse_penalty_kind(get_req<std::string>(pj, "kind", "penalty.", errs, "none"));
    } catch (const Error& e) {
      errs.add(std::string("penalty.kind: ") + e.what());
    }
    // Scaling conventions have no defaults.
    if (c.penalty.kind == PenaltyKind::ridge) {
      try {
        c.penalty.ridge_scaling = parse_ridge_scaling(get_req<std::string>(pj, "scaling", "penalty.", errs, "per-p"));
      } catch (const Error& e) {
        errs.add(std::string("penalty.scaling: ") + e.what());
      }
    }
    if (c.penalty.kind == PenaltyKind::l1 || c.penalty.kind == PenaltyKind::elastic_net) {
      try {
        c.penalty.l1_scaling = parse_l1_scaling(get_req<std::string>(pj, "scaling", "penalty.", errs, "plain"));
      } catch (const Error& e) {
        errs.add(std::string("penalty.scaling: ") + e.what());
      }
    }
    if (c.penalty.kind == PenaltyKind::elastic_net) c.penalty.lambda2 = get_req<double>(pj, "lambda2", "penalty.", errs, 0.0);
    if (c.penalty.kind == PenaltyKind::separable) errs.add("penalty.kind: separable penalties are not configurable");
  }

  if (j.contains("lambda_grid")) {
    const json& g = j["lambda_grid"];
    const double lo = get_req<double>(g, "lo", "lambda_grid.", errs, 1.0);
    const double hi = get_req<double>(g, "hi", "lambda_grid.", errs, 1.0);
    const int pts = get_req<int>(g, "points", "lambda_grid.", errs, 1);
    if (!(lo > 0 && hi >= lo && pts >= 1)) {
      errs.add("lambda_grid: need 0 < lo <= hi and points >= 1");
    } else {
      for (int k = 0; k < pts; ++k)
        c.lambdas.push_back(pts == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (pts - 1)));
    }
  } else if (j.contains("lambdas")) {
    try {
      c.lambdas = j["lambdas"].get<std::vector<double>>();
    } catch (const std::exception&) {
      errs.add("lambdas: expected a list of numbers");
    }
  }
  if (c.penalty.kind == PenaltyKind::none) {
    c.lambdas = {0.0};
  } else {
    if (c.lambdas.empty()) errs.add("lambdas or lambda_grid: required for a penalized estimator");
    for (double l : c.lambdas)
      if (!(l > 0)) errs.add("lambdas: must be positive");
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    c.solver.kkt_tol = get_opt<double>(s, "kkt_tol", "solver.", errs).value_or(c.solver.kkt_tol);
    c.solver.max_iter = get_opt<int>(s, "max_iter", "solver.", errs).value_or(c.solver.max_iter);
    if (auto a = get_opt<std::string>(s, "algorithm", "solver.", errs)) {
      try {
        c.solver.algorithm = parse_algorithm(*a);
      } catch (const Error& e) {
        errs.add(std::string("solver.algorithm: ") + e.what());
      }
    }
    c.solver.coercive_K = get_opt<double>(s, "coercive_K", "solver.", errs);
    if (!(c.solver.kkt_tol > 0)) errs.add("solver.kkt_tol: must be positive");
  }

  if (auto v = get_opt<std::string>(j, "variant", "", errs)) {
    try {
      c.variant = parse_variant(*v);
    } catch (const Error& e) {
      errs.add(std::string("variant: ") + e.what());
    }
  }

  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    const std::string pv = get_opt<std::string>(o, "pivot", "outputs.", errs).value_or("none");
    if (pv == "none") c.outputs.pivot = PivotKind::none;
    else if (pv == "ls") c.outputs.pivot = PivotKind::ls;
    else if (pv == "ridge") c.outputs.pivot = PivotKind::ridge;
    else if (pv == "general") c.outputs.pivot = PivotKind::general;
    else errs.add("outputs.pivot: expected none, ls, ridge or general");
    try {
      c.outputs.omega = parse_omega_source(get_opt<std::string>(o, "omega", "outputs.", errs).value_or("exact"));
    } catch (const Error& e) {
      errs.add(std::string("outputs.omega: ") + e.what());
    }
    c.outputs.ci = get_opt<bool>(o, "ci", "outputs.", errs).value_or(false);
    c.outputs.alpha = get_opt<double>(o, "alpha", "outputs.", errs).value_or(0.05);
    c.outputs.qq = get_opt<bool>(o, "qq", "outputs.", errs).value_or(false);
    if (!(c.outputs.alpha > 0 && c.outputs.alpha < 1)) errs.add("outputs.alpha: must be in (0, 1)");
  }

  errs.raise_if_any();
  c.source = j;
  return c;
}

ExperimentConfig load_preset(const std::string& name, bool full) {
  for (const auto& [key, text] : builtin_presets())
    if (key == name) return parse_config(text, full);
  std::string known;
  for (const auto& [key, text] : builtin_presets()) known += " " + key;
  fail(ErrorCode::invalid_argument, "unknown preset '" + name + "'; known:" + known);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [key, text] : builtin_presets()) out.push_back(key);
  return out;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OBSADJ_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && v > 0 && v <= 1024, ErrorCode::invalid_argument,
            "OBSADJ_WORKERS must be a positive integer");
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---------------------------------------------------------------- running

ReplicationRecord::ReplicationRecord()
    : df(kNaN), v(kNaN), r2(kNaN), gamma(kNaN), t2(kNaN), a2(kNaN), sigma2(kNaN),
      a_star(kNaN), sigma_star2(kNaN), gamma_star(kNaN), t_star(kNaN),
      ks_null(kNaN), coverage_null(kNaN), coverage_nonnull(kNaN),
      type1(kNaN), power(kNaN), signal_strength(kNaN), kkt(kNaN), support_size(kNaN), beta_sigma_norm2(kNaN) {}

namespace {

struct SquareCacheEntry {
  Ahat ahat;
  Traces traces;
};

void evaluate_record(const ExperimentConfig& cfg, const Dataset& data, const Loss& loss, const Penalty& pen,
                     const GramCache* gram, std::optional<SquareCacheEntry>& cache, ReplicationRecord& rec) {
  const Covariance& S = *data.covariance;
  const Vec& w = *data.index;
  const Index n = data.n(), p = data.p();

  const FitResult fit = obsadj::fit(data, loss, pen, cfg.solver, gram);
  rec.kkt = fit.kkt_residual;
  rec.support_size = static_cast<double>(fit.form.smooth() ? p : static_cast<Index>(fit.active.size()));
  const bool zero = (fit.beta.array() == 0.0).all();

  const bool cacheable = loss.kind() == LossKind::square && fit.form.smooth() && !fit.guard_active;
  // With square loss and a smooth penalty the design alone fixes A-hat.
  std::optional<SquareCacheEntry> local;
  std::optional<SquareCacheEntry>& slot = cacheable ? cache : local;
  if (!slot) {
    Ahat a = compute_ahat(fit, data, gram);
    const Traces t = compute_traces(a, fit, data);
    slot = SquareCacheEntry{std::move(a), t};
  }
  const Ahat& ahat = slot->ahat;
  const Traces& traces = slot->traces;

  const Variant variant = cfg.variant.value_or(default_variant(fit));
  const Adjustments adj = compute_adjustments(fit, data, traces, variant, &S, &ahat);
  const OracleQuantities orc = compute_oracle(fit, data, ahat, traces);

  rec.df = adj.df;
  rec.v = adj.v;
  rec.r2 = adj.r2;
  rec.gamma = adj.gamma;
  rec.t2 = adj.t2;
  rec.a2 = adj.a2;
  rec.sigma2 = adj.sigma2;
  rec.a_star = orc.a_star;
  rec.sigma_star2 = orc.sigma_star2;
  rec.gamma_star = orc.gamma_star;
  rec.t_star = orc.t_star;
  rec.beta_sigma_norm2 = S.quad(fit.beta);
  if (adj.v > 0) rec.signal_strength = adj.t() / adj.v;

  // The sign is not identifiable; evaluation uses the oracle's.
  const double ref = pen.kind == PenaltyKind::none ? orc.a_star : orc.t_star;
  const Vec signed_w = (ref < 0 ? -1.0 : 1.0) * w;

  std::optional<Vec> omega;
  std::optional<Vec> beta_d;
  auto get_omega = [&]() -> const Vec& {
    if (!omega) omega = omega_diag(data, cfg.outputs.omega);
    return *omega;
  };
  auto get_beta_d = [&]() -> const Vec& {
    if (!beta_d) beta_d = debias(fit, data, adj, S);
    return *beta_d;
  };

  if (cfg.outputs.pivot != PivotKind::none) {
    Vec piv;
    switch (cfg.outputs.pivot) {
      case PivotKind::ls: piv = pivot_ls(fit, data, get_omega(), signed_w); break;
      case PivotKind::ridge: piv = pivot_ridge(fit, adj, data, signed_w); break;
      case PivotKind::general: piv = pivot_general(get_beta_d(), adj, get_omega(), signed_w, n); break;
      default: break;
    }
    for (Index j = 0; j < p; ++j)
      if (w(j) == 0.0) rec.null_pivots.push_back(piv(j));
    if (!rec.null_pivots.empty()) rec.ks_null = ks_statistic_normal(rec.null_pivots);
  }

  if (cfg.outputs.ci) {
    const Vec& bd = get_beta_d();
    const Vec& om = get_omega();
    double rej_null = 0, n_null = 0, rej_non = 0, n_non = 0;
    for (Index j = 0; j < p; ++j) {
      const NullTest t = test_null(bd(j), adj, cfg.outputs.alpha, om(j), n);
      if (w(j) == 0.0) {
        n_null += 1;
        rej_null += t.reject ? 1 : 0;
      } else {
        n_non += 1;
        rej_non += t.reject ? 1 : 0;
      }
    }
    if (n_null > 0) rec.type1 = rej_null / n_null;
    if (n_non > 0) rec.power = rej_non / n_non;
    if (adj.t() > 0) {
      const auto cis = confidence_intervals(bd, adj, cfg.outputs.alpha, om, n);
      double cov_null = 0, cov_non = 0;
      for (Index j = 0; j < p; ++j) {
        const auto& ci = cis[static_cast<std::size_t>(j)];
        if (w(j) == 0.0) cov_null += (ci.lo <= 0.0 && 0.0 <= ci.hi) ? 1 : 0;
        else cov_non += (ci.lo <= signed_w(j) && signed_w(j) <= ci.hi) ? 1 : 0;
      }
      if (n_null > 0) rec.coverage_null = cov_null / n_null;
      if (n_non > 0) rec.coverage_nonnull = cov_non / n_non;
    } else {
      rec.status = "degenerate: t = 0, no confidence interval";
    }
  }
  if (zero) rec.status = "zero-fit";
}

std::vector<ReplicationRecord> run_job(const ExperimentConfig& cfg, std::size_t d, int rep) {
  const Dims dm = cfg.dims[d];
  const std::uint64_t seed = replication_seed(cfg, d, rep);
  const Covariance S = cfg.covariance.build(dm);
  const IndexVector w = normalize_index(cfg.index.build(dm.p), S);

  Dataset data;
  data.X = sample_design(S, dm.n, seed);
  data.covariance = S;
  data.index = w.w;

  const std::size_t L = cfg.links.size(), K = cfg.lambdas.size();
  std::optional<GramCache> gram;
  std::vector<std::optional<SquareCacheEntry>> caches(K);
  std::vector<ReplicationRecord> out;
  out.reserve(L * K);
  for (std::size_t l = 0; l < L; ++l) {
    const LinkSpec& link = cfg.links[l];
    data.y = sample_response(data.X, w, link, derive_seed(seed, 1 + l));
    data.beta_star = link.signal * w.w;
    const Loss loss = cfg.loss_for(link);
    if (loss.kind() == LossKind::square && !gram && dm.p <= dm.n) gram = make_gram_cache(data.X);
    for (std::size_t k = 0; k < K; ++k) {
      ReplicationRecord rec;
      rec.arm = (d * L + l) * K + k;
      rec.rep = rep;
      rec.seed = seed;
      rec.lambda = cfg.lambdas[k];
      rec.n = dm.n;
      rec.p = dm.p;
      try {
        const Penalty pen = cfg.penalty_for(cfg.lambdas[k]);
        evaluate_record(cfg, data, loss, pen, gram ? &*gram : nullptr, caches[k], rec);
      } catch (const Error& e) {
        const bool degenerate = e.code() == ErrorCode::degenerate || e.code() == ErrorCode::singular;
        rec.status = std::string(degenerate ? "degenerate: " : "failed: ") + e.what();
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

void check_finite(const ReplicationRecord& r) {
  if (!r.usable()) return;
  const double vals[] = {r.df, r.v, r.r2, r.gamma, r.t2, r.a2, r.sigma2, r.a_star, r.sigma_star2, r.gamma_star, r.t_star};
  for (double x : vals)
    if (!std::isfinite(x))
      fail(ErrorCode::degenerate, "non-finite value in replication " + std::to_string(r.rep) + " (seed " +
                                      std::to_string(r.seed) + ")");
}

}  // namespace

std::uint64_t replication_seed(const ExperimentConfig& cfg, std::size_t dims_index, int rep) {
  return derive_seed(cfg.seed, (static_cast<std::uint64_t>(dims_index) << 32) | static_cast<std::uint32_t>(rep));
}

Dataset simulate_dataset(const ExperimentConfig& cfg, std::size_t dims_index, std::size_t link_index,
                         std::uint64_t seed) {
  require(dims_index < cfg.dims.size(), ErrorCode::invalid_argument, "dims index out of range");
  require(link_index < cfg.links.size(), ErrorCode::invalid_argument, "link index out of range");
  const Dims dm = cfg.dims[dims_index];
  const LinkSpec& link = cfg.links[link_index];
  const Covariance S = cfg.covariance.build(dm);
  const IndexVector w = normalize_index(cfg.index.build(dm.p), S);
  Dataset data;
  data.X = sample_design(S, dm.n, seed);
  data.y = sample_response(data.X, w, link, derive_seed(seed, 1 + link_index));
  data.covariance = S;
  data.index = w.w;
  data.beta_star = link.signal * w.w;
  return data;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg_in, const RunOptions& opts) {
  ExperimentResult res;
  res.config = cfg_in;
  ExperimentConfig& cfg = res.config;
  if (opts.reps) {
    require(*opts.reps >= 1, ErrorCode::invalid_argument, "reps must be >= 1");
    cfg.reps = *opts.reps;
    cfg.source["reps"] = cfg.reps;
  }
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.source["seed"] = cfg.seed;
  }
  res.workers = resolve_workers(opts.workers);

  for (const Dims& d : cfg.dims)
    for (const LinkSpec& l : cfg.links)
      for (double lam : cfg.lambdas) {
        Arm a;
        a.dims = d;
        a.link = l.label();
        a.lambda = lam;
        a.label = a.link + "/lambda=" + fmt_short(lam) + "/n=" + std::to_string(d.n) + ",p=" + std::to_string(d.p);
        res.arms.push_back(a);
      }

  const std::size_t jobs = cfg.dims.size() * static_cast<std::size_t>(cfg.reps);
  std::vector<std::vector<ReplicationRecord>> slots(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs) return;
      try {
        slots[job] = run_job(cfg, job / static_cast<std::size_t>(cfg.reps), static_cast<int>(job % cfg.reps));
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(res.workers, static_cast<int>(jobs)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& s : slots)
    for (auto& r : s) res.records.push_back(std::move(r));
  std::sort(res.records.begin(), res.records.end(), [](const ReplicationRecord& a, const ReplicationRecord& b) {
    return a.arm != b.arm ? a.arm < b.arm : a.rep < b.rep;
  });
  for (const auto& r : res.records) check_finite(r);
  return res;
}

// ---------------------------------------------------------------- summary

namespace {

struct Metric {
  const char* name;
  double (*get)(const ReplicationRecord&);
};

double safe_sqrt0(double x) { return std::sqrt(std::max(0.0, x)); }

const Metric kMetrics[] = {
    {"df", [](const ReplicationRecord& r) { return r.df; }},
    {"v", [](const ReplicationRecord& r) { return r.v; }},
    {"r2", [](const ReplicationRecord& r) { return r.r2; }},
    {"gamma", [](const ReplicationRecord& r) { return r.gamma; }},
    {"t2", [](const ReplicationRecord& r) { return r.t2; }},
    {"a2", [](const ReplicationRecord& r) { return r.a2; }},
    {"sigma2", [](const ReplicationRecord& r) { return r.sigma2; }},
    {"a_star", [](const ReplicationRecord& r) { return r.a_star; }},
    {"sigma_star2", [](const ReplicationRecord& r) { return r.sigma_star2; }},
    {"gamma_star", [](const ReplicationRecord& r) { return r.gamma_star; }},
    {"t_star", [](const ReplicationRecord& r) { return r.t_star; }},
    {"ks_null", [](const ReplicationRecord& r) { return r.ks_null; }},
    {"coverage_null", [](const ReplicationRecord& r) { return r.coverage_null; }},
    {"coverage_nonnull", [](const ReplicationRecord& r) { return r.coverage_nonnull; }},
    {"type1_error", [](const ReplicationRecord& r) { return r.type1; }},
    {"power", [](const ReplicationRecord& r) { return r.power; }},
    {"signal_strength", [](const ReplicationRecord& r) { return r.signal_strength; }},
    {"kkt_residual", [](const ReplicationRecord& r) { return r.kkt; }},
    {"support_size", [](const ReplicationRecord& r) { return r.support_size; }},
    {"a_hat", [](const ReplicationRecord& r) { return safe_sqrt0(r.a2); }},
    {"abs_a_star", [](const ReplicationRecord& r) { return std::abs(r.a_star); }},
    {"a_star2", [](const ReplicationRecord& r) { return r.a_star * r.a_star; }},
    {"abs_a_error", [](const ReplicationRecord& r) { return std::abs(safe_sqrt0(r.a2) - std::abs(r.a_star)); }},
    {"a2_abs_error", [](const ReplicationRecord& r) { return std::abs(r.a2 - r.a_star * r.a_star); }},
    {"sigma2_rel_error",
     [](const ReplicationRecord& r) { return std::abs(r.sigma2 - r.sigma_star2) / r.sigma_star2; }},
    {"gamma_error", [](const ReplicationRecord& r) { return std::abs(r.v * (r.gamma - r.gamma_star)); }},
    {"t2_error", [](const ReplicationRecord& r) { return std::abs(r.t2 - r.t_star * r.t_star) / r.r2; }},
    {"normalized_a_hat",
     [](const ReplicationRecord& r) { return safe_sqrt0(r.a2) / std::sqrt(0.01 + r.beta_sigma_norm2); }},
    {"normalized_a_star",
     [](const ReplicationRecord& r) { return r.a_star / std::sqrt(0.01 + r.beta_sigma_norm2); }},
};

json describe(const std::vector<double>& xs) {
  std::vector<double> f;
  for (double x : xs)
    if (std::isfinite(x)) f.push_back(x);
  if (f.empty()) return json{{"count", 0}, {"mean", nullptr}, {"sd", nullptr}, {"stderr", nullptr}};
  return json{{"count", f.size()}, {"mean", mean(f)}, {"sd", sample_sd(f)}, {"stderr", std_error(f)}};
}

}  // namespace

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = cfg.source.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json summarize(const ExperimentResult& result) {
  require(!result.records.empty(), ErrorCode::invalid_argument, "no records to summarize");
  std::vector<const ReplicationRecord*> recs;
  for (const auto& r : result.records) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(), [](const ReplicationRecord* a, const ReplicationRecord* b) {
    return a->arm != b->arm ? a->arm < b->arm : a->rep < b->rep;
  });

  json out;
  out["experiment"] = result.config.name;
  out["description"] = result.config.description;
  out["provenance"] = {{"config_hash", config_hash(result.config)},
                       {"seed", result.config.seed},
                       {"reps", result.config.reps},
                       {"scale", result.config.source.value("scale", "reduced")},
                       {"library_version", "0.1.0"}};
  json arms = json::array();
  for (std::size_t a = 0; a < result.arms.size(); ++a) {
    const Arm& arm = result.arms[a];
    std::vector<const ReplicationRecord*> ok;
    json failures = json::array();
    int zero_fits = 0, total = 0;
    const ReplicationRecord* first = nullptr;
    for (const auto* r : recs) {
      if (r->arm != a) continue;
      ++total;
      if (!first) first = r;
      if (r->usable()) ok.push_back(r);
      else if (r->status == "zero-fit") ++zero_fits;
      else failures.push_back({{"rep", r->rep}, {"seed", r->seed}, {"status", r->status}});
    }
    json stats;
    for (const Metric& m : kMetrics) {
      std::vector<double> xs;
      for (const auto* r : ok) xs.push_back(m.get(*r));
      stats[m.name] = describe(xs);
    }
    json pooled = json::object();
    std::vector<double> nulls;
    for (const auto* r : ok) nulls.insert(nulls.end(), r->null_pivots.begin(), r->null_pivots.end());
    if (!nulls.empty()) {
      const double ks = ks_statistic_normal(nulls);
      pooled["null_pivot_count"] = nulls.size();
      pooled["ks_null_statistic"] = ks;
      pooled["ks_null_pvalue"] = ks_pvalue(ks, static_cast<double>(nulls.size()));
      pooled["null_pivot_mean"] = mean(nulls);
      pooled["null_pivot_sd"] = sample_sd(nulls);
    }
    if (first && first->usable() && !first->null_pivots.empty()) {
      pooled["first_rep_ks_statistic"] = first->ks_null;
      pooled["first_rep_ks_pvalue"] = ks_pvalue(first->ks_null, static_cast<double>(first->null_pivots.size()));
    }
    arms.push_back({{"label", arm.label},
                    {"link", arm.link},
                    {"lambda", arm.lambda},
                    {"n", arm.dims.n},
                    {"p", arm.dims.p},
                    {"records", total},
                    {"ok", ok.size()},
                    {"zero_fit", zero_fits},
                    {"failed", failures.size()},
                    {"failures", failures},
                    {"stats", stats},
                    {"pooled", pooled}});
  }
  out["arms"] = arms;
  return out;
}

// ---------------------------------------------------------------- output

const char* const kRecordHeader =
    "experiment,rep,seed,lambda,n,p,df,v,r2,gamma,t2,a2,sigma2,a_star,sigma_star2,gamma_star,t_star,ks_null,"
    "coverage_null,coverage_nonnull";

std::string record_csv_row(const std::string& experiment, const ReplicationRecord& r) {
  std::ostringstream os;
  os << experiment << ',' << r.rep << ',' << r.seed << ',' << fmt(r.lambda) << ',' << r.n << ',' << r.p;
  for (double x : {r.df, r.v, r.r2, r.gamma, r.t2, r.a2, r.sigma2, r.a_star, r.sigma_star2, r.gamma_star, r.t_star,
                   r.ks_null, r.coverage_null, r.coverage_nonnull})
    os << ',' << fmt(x);
  return os.str();
}

void write_outputs(const ExperimentResult& result, const nlohmann::json& summary, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::io, "cannot create output directory " + dir + ": " + ec.message());
  auto open = [&](const fs::path& path) {
    std::ofstream f(path);
    require(static_cast<bool>(f), ErrorCode::io, "cannot write " + path.string());
    return f;
  };
  {
    std::ofstream f = open(fs::path(dir) / "records.csv");
    f << kRecordHeader << '\n';
    for (const auto& r : result.records)
      f << record_csv_row(result.config.name + "/" + result.arms[r.arm].link, r) << '\n';
  }
  {
    std::ofstream f = open(fs::path(dir) / "summary.json");
    f << summary.dump(2) << '\n';
  }
  {
    std::ofstream f = open(fs::path(dir) / "config.json");
    f << result.config.source.dump(2) << '\n';
  }
  {
    std::ofstream f = open(fs::path(dir) / "status.csv");
    f << "arm,rep,seed,status\n";
    for (const auto& r : result.records) {
      std::string s = r.status;
      std::replace(s.begin(), s.end(), '"', '\'');
      f << r.arm << ',' << r.rep << ',' << r.seed << ",\"" << s << "\"\n";
    }
  }
  if (result.config.outputs.qq && result.config.outputs.pivot != PivotKind::none) {
    fs::create_directories(fs::path(dir) / "qq", ec);
    require(!ec, ErrorCode::io, "cannot create qq directory");
    for (std::size_t a = 0; a < result.arms.size(); ++a) {
      std::vector<double> nulls;
      for (const auto& r : result.records)
        if (r.arm == a && r.usable()) nulls.insert(nulls.end(), r.null_pivots.begin(), r.null_pivots.end());
      if (nulls.empty()) continue;
      std::ofstream f = open(fs::path(dir) / "qq" / ("arm" + std::to_string(a) + "_null.csv"));
      f << "theoretical_quantile,empirical_quantile\n";
      for (const auto& [t, e] : normal_qq(nulls)) f << fmt(t) << ',' << fmt(e) << '\n';
    }
  }
}

}  // namespace obsadj
