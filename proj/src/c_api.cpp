#include "obsadj/obsadj.h"

#include "obsadj/adjustments.hpp"
#include "obsadj/estimator.hpp"
#include "obsadj/experiment.hpp"
#include "obsadj/inference.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

struct oa_dataset {
  obsadj::Dataset data;
};

struct oa_fit {
  obsadj::FitResult fit;
  obsadj::Index n = 0;
};

namespace {

using namespace obsadj;

thread_local std::string g_last_error;

oa_status set_error(oa_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
oa_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return OA_OK;
  } catch (const Error& e) {
    return set_error(static_cast<oa_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(OA_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(OA_INTERNAL, e.what());
  }
}

void need(const void* ptr, const char* what) {
  require(ptr != nullptr, ErrorCode::invalid_argument, std::string(what) + " must not be null");
}

Penalty penalty_from(const oa_fit_options& o) {
  const PenaltyKind kind = parse_penalty_kind(o.penalty ? o.penalty : "none");
  const bool needs_scaling = kind == PenaltyKind::ridge || kind == PenaltyKind::l1 || kind == PenaltyKind::elastic_net;
  require(!needs_scaling || o.scaling != nullptr, ErrorCode::invalid_argument,
          "penalty " + to_string(kind) + " needs an explicit scaling");
  switch (kind) {
    case PenaltyKind::none: return Penalty::none();
    case PenaltyKind::ridge: return Penalty::ridge(o.lambda, parse_ridge_scaling(o.scaling));
    case PenaltyKind::l1: return Penalty::l1(o.lambda, parse_l1_scaling(o.scaling));
    case PenaltyKind::elastic_net: return Penalty::elastic_net(o.lambda, o.lambda2, parse_l1_scaling(o.scaling));
    default: fail(ErrorCode::unsupported, "separable penalties are not available through this interface");
  }
}

SolverConfig solver_from(const oa_fit_options& o) {
  SolverConfig cfg;
  cfg.algorithm = parse_algorithm(o.algorithm ? o.algorithm : "auto");
  require(o.kkt_tol > 0, ErrorCode::invalid_argument, "kkt_tol must be positive");
  require(o.max_iter > 0, ErrorCode::invalid_argument, "max_iter must be positive");
  cfg.kkt_tol = o.kkt_tol;
  cfg.max_iter = o.max_iter;
  if (o.use_coercive) cfg.coercive_K = o.coercive_K;
  return cfg;
}

void check_pair(const oa_dataset* ds, const oa_fit* fit) {
  need(ds, "dataset");
  need(fit, "fit");
  require(fit->fit.beta.size() == ds->data.p() && fit->n == ds->data.n(), ErrorCode::dimension_mismatch,
          "fit does not belong to this dataset");
}

const Covariance& covariance_of(const oa_dataset* ds) {
  require(ds->data.covariance.has_value(), ErrorCode::missing_truth, "dataset has no covariance attached");
  return *ds->data.covariance;
}

Adjustments adjust(const oa_dataset* ds, const oa_fit* fit, const char* variant, Ahat* ahat_out = nullptr) {
  const Dataset& d = ds->data;
  Ahat ahat = compute_ahat(fit->fit, d);
  const Traces tr = compute_traces(ahat, fit->fit, d);
  const Variant var = variant ? parse_variant(variant) : default_variant(fit->fit);
  const Covariance* S = d.covariance ? &*d.covariance : nullptr;
  Adjustments adj = compute_adjustments(fit->fit, d, tr, var, S, &ahat);
  if (ahat_out) *ahat_out = std::move(ahat);
  return adj;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* oa_last_error(void) { return g_last_error.c_str(); }

const char* oa_version(void) { return "0.1.0"; }

const char* oa_status_name(oa_status s) {
  switch (s) {
    case OA_OK: return "ok";
    case OA_INVALID_ARGUMENT: return "invalid_argument";
    case OA_DIMENSION_MISMATCH: return "dimension_mismatch";
    case OA_NOT_CONVERGED: return "not_converged";
    case OA_SEPARABLE_DATA: return "separable_data";
    case OA_KKT_VIOLATION: return "kkt_violation";
    case OA_UNSUPPORTED: return "unsupported";
    case OA_SINGULAR: return "singular";
    case OA_DEGENERATE: return "degenerate";
    case OA_MISSING_TRUTH: return "missing_truth";
    case OA_IO: return "io";
    case OA_INTERNAL: return "internal";
  }
  return "unknown";
}

oa_status oa_dataset_create(const double* X, const double* y, int64_t n, int64_t p, oa_dataset** out) {
  return guarded([&] {
    need(X, "X");
    need(y, "y");
    need(out, "out");
    require(n > 0 && p > 0, ErrorCode::invalid_argument, "n and p must be positive");
    auto ds = std::make_unique<oa_dataset>();
    ds->data.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(X, n, p);
    ds->data.y = Eigen::Map<const Vec>(y, n);
    ds->data.validate();
    *out = ds.release();
  });
}

oa_status oa_dataset_simulate(const char* config_json, int full, int dims_index, int link_index, uint64_t seed,
                              oa_dataset** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out, "out");
    require(dims_index >= 0 && link_index >= 0, ErrorCode::invalid_argument, "indices must be nonnegative");
    const ExperimentConfig cfg = parse_config(config_json, full != 0);
    auto ds = std::make_unique<oa_dataset>();
    ds->data = simulate_dataset(cfg, static_cast<std::size_t>(dims_index), static_cast<std::size_t>(link_index), seed);
    *out = ds.release();
  });
}

oa_status oa_dataset_set_covariance_scaled(oa_dataset* ds, double c) {
  return guarded([&] {
    need(ds, "dataset");
    require(c > 0 && std::isfinite(c), ErrorCode::invalid_argument, "covariance scale must be positive");
    ds->data.covariance = Covariance::identity_scaled(ds->data.p(), c);
  });
}

oa_status oa_dataset_set_covariance(oa_dataset* ds, const double* sigma) {
  return guarded([&] {
    need(ds, "dataset");
    need(sigma, "sigma");
    const Index p = ds->data.p();
    ds->data.covariance = Covariance::explicit_matrix(
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(sigma, p, p));
  });
}

oa_status oa_dataset_set_truth(oa_dataset* ds, const double* w, const double* beta_star) {
  return guarded([&] {
    need(ds, "dataset");
    need(w, "w");
    const Index p = ds->data.p();
    const Covariance& S = covariance_of(ds);
    ds->data.index = normalize_index(Eigen::Map<const Vec>(w, p), S).w;
    if (beta_star) ds->data.beta_star = Eigen::Map<const Vec>(beta_star, p);
    else ds->data.beta_star.reset();
  });
}

oa_status oa_dataset_dims(const oa_dataset* ds, int64_t* n, int64_t* p) {
  return guarded([&] {
    need(ds, "dataset");
    if (n) *n = ds->data.n();
    if (p) *p = ds->data.p();
  });
}

oa_status oa_dataset_covariance(const oa_dataset* ds, int* kind, double* scale, double* sigma_or_null) {
  return guarded([&] {
    need(ds, "dataset");
    need(kind, "kind");
    if (!ds->data.covariance) {
      *kind = -1;
      return;
    }
    const Covariance& S = *ds->data.covariance;
    *kind = S.is_isotropic() ? 0 : 1;
    if (scale) *scale = S.is_isotropic() ? S.scale() : std::numeric_limits<double>::quiet_NaN();
    if (sigma_or_null) {
      const Mat m = S.dense();
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(sigma_or_null, m.rows(),
                                                                                          m.cols()) = m;
    }
  });
}

int oa_dataset_has_truth(const oa_dataset* ds) { return ds && ds->data.has_truth() ? 1 : 0; }

oa_status oa_dataset_copy(const oa_dataset* ds, oa_data_field field, double* buf, int64_t len) {
  return guarded([&] {
    need(ds, "dataset");
    need(buf, "buf");
    const Dataset& d = ds->data;
    auto copy_vec = [&](const Vec& v) {
      require(len == v.size(), ErrorCode::dimension_mismatch, "buffer length mismatch");
      std::memcpy(buf, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    };
    switch (field) {
      case OA_DATA_X:
        require(len == d.n() * d.p(), ErrorCode::dimension_mismatch, "buffer length mismatch");
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(buf, d.n(), d.p()) = d.X;
        break;
      case OA_DATA_Y: copy_vec(d.y); break;
      case OA_DATA_INDEX:
        require(d.index.has_value(), ErrorCode::missing_truth, "dataset has no index");
        copy_vec(*d.index);
        break;
      case OA_DATA_BETA_STAR:
        require(d.beta_star.has_value(), ErrorCode::missing_truth, "dataset has no coefficient vector");
        copy_vec(*d.beta_star);
        break;
      default: fail(ErrorCode::invalid_argument, "unknown dataset field");
    }
  });
}

void oa_dataset_free(oa_dataset* ds) { delete ds; }

void oa_fit_options_init(oa_fit_options* o) {
  if (!o) return;
  o->loss = "square";
  o->penalty = "none";
  o->scaling = nullptr;
  o->lambda = 0.0;
  o->lambda2 = 0.0;
  o->algorithm = "auto";
  o->kkt_tol = 1e-8;
  o->max_iter = 100;
  o->use_coercive = 0;
  o->coercive_K = 0.0;
}

oa_status oa_fit_create(const oa_dataset* ds, const oa_fit_options* opts, oa_fit** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(opts, "options");
    need(out, "out");
    const Loss loss = Loss::parse(opts->loss ? opts->loss : "square");
    const SolverConfig cfg = solver_from(*opts);
    auto f = std::make_unique<oa_fit>();
    if (cfg.coercive_K) {
      require(parse_penalty_kind(opts->penalty ? opts->penalty : "none") == PenaltyKind::none,
              ErrorCode::unsupported, "the coercive guard applies to unpenalized fits only");
      f->fit = fit_coercive(ds->data, loss, *cfg.coercive_K, cfg);
    } else {
      f->fit = obsadj::fit(ds->data, loss, penalty_from(*opts), cfg);
    }
    f->n = ds->data.n();
    *out = f.release();
  });
}

oa_status oa_fit_from_beta(const oa_dataset* ds, const oa_fit_options* opts, const double* beta, oa_fit** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(opts, "options");
    need(beta, "beta");
    need(out, "out");
    const Loss loss = Loss::parse(opts->loss ? opts->loss : "square");
    std::optional<double> K;
    if (opts->use_coercive) K = opts->coercive_K;
    const Penalty pen = K ? Penalty::none() : penalty_from(*opts);
    auto f = std::make_unique<oa_fit>();
    f->fit = evaluate_fit(ds->data, loss, pen, Eigen::Map<const Vec>(beta, ds->data.p()), K);
    f->n = ds->data.n();
    *out = f.release();
  });
}

oa_status oa_fit_get_info(const oa_fit* fit, oa_fit_info* out) {
  return guarded([&] {
    need(fit, "fit");
    need(out, "out");
    const FitResult& r = fit->fit;
    out->objective = r.objective;
    out->kkt_residual = r.kkt_residual;
    out->converged = r.converged ? 1 : 0;
    out->guard_active = r.guard_active ? 1 : 0;
    out->iterations = r.iterations;
    out->support_size = static_cast<int64_t>((r.beta.array() != 0.0).count());
    out->p = r.beta.size();
  });
}

oa_status oa_fit_copy(const oa_fit* fit, oa_fit_field field, double* buf, int64_t len) {
  return guarded([&] {
    need(fit, "fit");
    need(buf, "buf");
    const Vec* v = nullptr;
    switch (field) {
      case OA_FIT_BETA: v = &fit->fit.beta; break;
      case OA_FIT_PSI: v = &fit->fit.psi; break;
      case OA_FIT_CURVATURE: v = &fit->fit.curvature; break;
      case OA_FIT_LINEAR_PREDICTOR: v = &fit->fit.u; break;
      default: fail(ErrorCode::invalid_argument, "unknown fit field");
    }
    require(len == v->size(), ErrorCode::dimension_mismatch, "buffer length mismatch");
    std::memcpy(buf, v->data(), sizeof(double) * static_cast<std::size_t>(v->size()));
  });
}

void oa_fit_free(oa_fit* fit) { delete fit; }

oa_status oa_adjust(const oa_dataset* ds, const oa_fit* fit, const char* variant, oa_adjustments* out) {
  return guarded([&] {
    check_pair(ds, fit);
    need(out, "out");
    const Adjustments a = adjust(ds, fit, variant);
    *out = oa_adjustments{a.df, a.v, a.r2, a.gamma, a.t2, a.a2, a.sigma2, a.trace_v, a.trace_d,
                          a.degenerate_branch ? 1 : 0};
  });
}

oa_status oa_oracle_compute(const oa_dataset* ds, const oa_fit* fit, oa_oracle* out) {
  return guarded([&] {
    check_pair(ds, fit);
    need(out, "out");
    const Ahat ahat = compute_ahat(fit->fit, ds->data);
    const Traces tr = compute_traces(ahat, fit->fit, ds->data);
    const OracleQuantities o = compute_oracle(fit->fit, ds->data, ahat, tr);
    *out = oa_oracle{o.a_star, o.sigma_star2, o.gamma_star, o.t_star};
  });
}

oa_status oa_omega(const oa_dataset* ds, const char* source, double* buf, int64_t len) {
  return guarded([&] {
    need(ds, "dataset");
    need(buf, "buf");
    const Vec om = omega_diag(ds->data, parse_omega_source(source ? source : "exact"));
    require(len == om.size(), ErrorCode::dimension_mismatch, "buffer length mismatch");
    std::memcpy(buf, om.data(), sizeof(double) * static_cast<std::size_t>(om.size()));
  });
}

oa_status oa_infer(const oa_dataset* ds, const oa_fit* fit, const char* variant, double alpha,
                   const char* omega_source, oa_infer_row* rows, int64_t len, int* ci_available) {
  return guarded([&] {
    check_pair(ds, fit);
    need(rows, "rows");
    const Index p = ds->data.p(), n = ds->data.n();
    require(len == p, ErrorCode::dimension_mismatch, "row buffer length must equal p");
    require(alpha > 0 && alpha < 1, ErrorCode::invalid_argument, "alpha must be in (0, 1)");
    const Adjustments adj = adjust(ds, fit, variant);
    const Vec om = omega_diag(ds->data, parse_omega_source(omega_source ? omega_source : "exact"));
    Vec bd;
    if (fit->fit.penalty.kind == PenaltyKind::none && !fit->fit.guard_active && !ds->data.covariance) {
      bd = fit->fit.beta;  // X'psi = 0 at the unpenalized solution
    } else {
      bd = debias(fit->fit, ds->data, adj, covariance_of(ds));
    }
    const bool have_ci = adj.t() > 0;
    std::vector<CoordinateCI> cis;
    if (have_ci) cis = confidence_intervals(bd, adj, alpha, om, n);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Index j = 0; j < p; ++j) {
      const NullTest t = test_null(bd(j), adj, alpha, om(j), n);
      oa_infer_row& r = rows[j];
      r.j = j;
      r.beta = fit->fit.beta(j);
      r.beta_d = bd(j);
      r.center = have_ci ? cis[static_cast<std::size_t>(j)].center : nan;
      r.lo = have_ci ? cis[static_cast<std::size_t>(j)].lo : nan;
      r.hi = have_ci ? cis[static_cast<std::size_t>(j)].hi : nan;
      r.stat = t.stat;
      r.reject = t.reject ? 1 : 0;
    }
    if (ci_available) *ci_available = have_ci ? 1 : 0;
  });
}

oa_status oa_signal_strength(const oa_dataset* ds, const oa_fit* fit, const char* variant, double* out) {
  return guarded([&] {
    check_pair(ds, fit);
    need(out, "out");
    *out = signal_strength(adjust(ds, fit, variant));
  });
}

int oa_preset_count(void) { return static_cast<int>(builtin_presets().size()); }

const char* oa_preset_name(int i) {
  const auto& all = builtin_presets();
  if (i < 0 || static_cast<std::size_t>(i) >= all.size()) return nullptr;
  return all[static_cast<std::size_t>(i)].first.c_str();
}

oa_status oa_preset_json(const char* name, const char** out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    for (const auto& [key, text] : builtin_presets()) {
      if (key == name) {
        *out = text.c_str();
        return;
      }
    }
    load_preset(name);  // raises the unknown-preset error
  });
}

void oa_experiment_options_init(oa_experiment_options* o) {
  if (!o) return;
  o->full = 0;
  o->workers = 0;
  o->reps = 0;
  o->has_seed = 0;
  o->seed = 0;
}

oa_status oa_experiment_run(const char* config_json, const oa_experiment_options* opts, const char* out_dir,
                            char** summary_json) {
  return guarded([&] {
    need(config_json, "config_json");
    oa_experiment_options o;
    oa_experiment_options_init(&o);
    if (opts) o = *opts;
    require(o.reps >= 0 && o.workers >= 0, ErrorCode::invalid_argument, "reps and workers must be nonnegative");
    const ExperimentConfig cfg = parse_config(config_json, o.full != 0);
    RunOptions ro;
    ro.workers = o.workers;
    if (o.reps > 0) ro.reps = o.reps;
    if (o.has_seed) ro.seed = o.seed;
    const ExperimentResult res = run_experiment(cfg, ro);
    const nlohmann::json summary = summarize(res);
    if (out_dir) write_outputs(res, summary, out_dir);
    if (summary_json) *summary_json = dup_string(summary.dump(2));
  });
}

void oa_string_free(char* s) { std::free(s); }

}  // extern "C"
