#include "obsadj/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace obsadj {

double guard_h(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

double guard_hprime(double t) {
  if (t <= 0 || t >= 1) return 0.0;
  return 6.0 * t * (1.0 - t);
}

double guard_H(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return t - 0.5;
  const double t3 = t * t * t;
  return t3 - 0.5 * t3 * t;
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "auto") return Algorithm::automatic;
  if (s == "newton") return Algorithm::newton;
  if (s == "prox-gradient") return Algorithm::prox_gradient;
  if (s == "coordinate-descent") return Algorithm::coordinate_descent;
  fail(ErrorCode::invalid_argument, "unknown algorithm: " + s);
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::automatic: return "auto";
    case Algorithm::newton: return "newton";
    case Algorithm::prox_gradient: return "prox-gradient";
    case Algorithm::coordinate_descent: return "coordinate-descent";
  }
  return "?";
}

GramCache make_gram_cache(const Mat& X) {
  GramCache c;
  c.gram = Mat::Zero(X.cols(), X.cols());
  c.gram.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  c.gram.triangularView<Eigen::StrictlyUpper>() = c.gram.transpose();
  return c;
}

const Eigen::LLT<Mat>* GramCache::factor(const Vec& shift) const {
  require(shift.size() == gram.rows(), ErrorCode::dimension_mismatch, "shift length mismatch");
  if (!llt_ || shift_.size() != shift.size() || shift_ != shift) {
    Mat M = gram;
    M.diagonal() += shift;
    auto llt = std::make_shared<Eigen::LLT<Mat>>(M);
    shift_ = shift;
    llt_ = std::move(llt);
  }
  if (llt_->info() != Eigen::Success) return nullptr;
  const Vec ld = llt_->matrixLLT().diagonal().cwiseAbs2();
  if (!(ld.minCoeff() > 1e-13 * std::max(ld.maxCoeff(), 1e-300))) return nullptr;
  return llt_.get();
}

namespace {

// Smooth part of the objective and its derivatives at one iterate.
struct Point {
  Vec beta;
  Vec u;
  Vec d1;
  double smooth = 0.0;   // (1/n) sum l + H(s)
  double total = 0.0;    // smooth + g
  double level = 0.0;    // guard argument s
  Vec grad;              // X'(d1 + h(s) u)/n
  double kkt = 0.0;
  double kkt_abs = 0.0;
};

class Problem {
 public:
  Problem(const Dataset& data, const Loss& loss, const SeparableForm& form, std::optional<double> K)
      : data_(data), loss_(loss), form_(form), K_(K), n_(static_cast<double>(data.n())) {}

  double level(const Vec& u) const { return K_ ? 0.5 * (u.squaredNorm() / n_ - *K_) : 0.0; }

  double smooth_value(const Vec& u) const {
    double v = loss_.sum(data_.y, u) / n_;
    if (K_) v += guard_H(level(u));
    return v;
  }

  void evaluate(Point& pt, bool with_grad = true) const {
    pt.smooth = smooth_value(pt.u);
    pt.total = pt.smooth + form_.value(pt.beta);
    pt.level = level(pt.u);
    if (!with_grad) return;
    pt.d1 = loss_.d1(data_.y, pt.u);
    Vec w = pt.d1;
    if (K_) w += guard_h(pt.level) * pt.u;
    pt.grad = data_.X.transpose() * w / n_;
    const Vec z = -pt.grad;
    const Vec gap = form_.subgradient_gap(pt.beta, z);
    pt.kkt_abs = gap.size() ? gap.maxCoeff() : 0.0;
    pt.kkt = pt.kkt_abs / std::max(1.0, z.cwiseAbs().maxCoeff());
  }

  Point at(const Vec& beta) const {
    Point pt;
    pt.beta = beta;
    pt.u = data_.X * beta;
    evaluate(pt);
    return pt;
  }

  // Weights of X'diag(w)X/n in the Hessian of the smooth part.
  Vec hessian_weights(const Point& pt) const {
    Vec w = loss_.d2(data_.y, pt.u);
    if (K_) w.array() += guard_h(pt.level);
    return w;
  }
  double rank_one_weight(const Point& pt) const { return K_ ? guard_hprime(pt.level) / (n_ * n_) : 0.0; }

  const Dataset& data() const { return data_; }
  const Loss& loss() const { return loss_; }
  const SeparableForm& form() const { return form_; }
  bool guarded() const { return K_.has_value(); }
  double n() const { return n_; }

 private:
  const Dataset& data_;
  const Loss& loss_;
  const SeparableForm& form_;
  std::optional<double> K_;
  double n_;
};

[[noreturn]] void fail_not_converged(const std::string& algo, const std::vector<double>& trace, bool advise_guard) {
  std::ostringstream os;
  os << algo << " did not reach the KKT tolerance after " << trace.size() << " iterations; last residuals:";
  const std::size_t from = trace.size() > 5 ? trace.size() - 5 : 0;
  for (std::size_t k = from; k < trace.size(); ++k) os << ' ' << trace[k];
  if (advise_guard) os << "; if the data are separable refit with a coercive guard (--coercive-K)";
  fail(ErrorCode::not_converged, os.str());
}

void check_divergence(const Problem& prob, const Point& pt, const SolverConfig& cfg) {
  const SeparableForm& f = prob.form();
  if (prob.guarded() || !f.smooth() || (f.kappa.array() > 0).any()) return;
  if (pt.u.squaredNorm() / prob.n() > cfg.divergence_level)
    fail(ErrorCode::separable_data,
         "fitted values diverge (|Xb|^2/n above " + std::to_string(cfg.divergence_level) +
             "); the data look separable, refit with a coercive guard (--coercive-K)");
}

// Line search along d with Xd precomputed. Returns false if no acceptable step.
bool line_search(const Problem& prob, Point& pt, const Vec& d, const Vec& Xd, double decrease,
                 const SolverConfig& cfg) {
  double s = 1.0;
  Point trial;
  // Below rounding the Armijo test cannot tell steps apart; judge the full
  // step by stationarity instead.
  const double noise = 1e-12 * (1.0 + std::abs(pt.total));
  if (decrease > -noise) {
    trial.beta = pt.beta + d;
    trial.u = pt.u + Xd;
    prob.evaluate(trial);
    if (std::isfinite(trial.total) && trial.kkt < pt.kkt && trial.total <= pt.total + noise) {
      pt = std::move(trial);
      return true;
    }
  }
  for (int k = 0; k < 60; ++k) {
    trial.beta = pt.beta + s * d;
    trial.u = pt.u + s * Xd;
    prob.evaluate(trial, false);
    if (std::isfinite(trial.total) && trial.total <= pt.total + cfg.armijo * s * decrease) {
      prob.evaluate(trial);
      pt = std::move(trial);
      return true;
    }
    s *= cfg.backtrack;
  }
  // Objective differences are below rounding: accept the full step if it
  // improves stationarity.
  trial.beta = pt.beta + d;
  trial.u = pt.u + Xd;
  prob.evaluate(trial);
  if (std::isfinite(trial.total) && trial.kkt < pt.kkt && trial.total <= pt.total + 1e-12 * (1 + std::abs(pt.total))) {
    pt = std::move(trial);
    return true;
  }
  return false;
}

Vec newton_direction_cholesky(const Problem& prob, const Point& pt, const GramCache* gram) {
  const Mat& X = prob.data().X;
  const Index p = X.cols();
  const double n = prob.n();
  const Vec w = prob.hessian_weights(pt);
  Mat M;
  const bool unit = gram && !prob.guarded() && (w.array() == 1.0).all();
  if (unit) {
    if (const auto* f = gram->factor(n * prob.form().kappa))
      return n * f->solve(-pt.grad - prob.form().kappa.cwiseProduct(pt.beta));
    M = gram->gram / n;
  } else {
    const Mat Xw = w.cwiseSqrt().asDiagonal() * X;
    M = Mat::Zero(p, p);
    M.selfadjointView<Eigen::Lower>().rankUpdate(Xw.transpose(), 1.0 / n);
  }
  M.diagonal() += prob.form().kappa;
  const double r1 = prob.rank_one_weight(pt);
  if (r1 > 0) {
    const Vec g = X.transpose() * pt.u;
    M.selfadjointView<Eigen::Lower>().rankUpdate(g, r1);
  }
  Eigen::LLT<Mat> llt(M.selfadjointView<Eigen::Lower>());
  double mu = 0.0;
  const double scale = std::max(M.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  while (llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite()) {
    mu = mu == 0.0 ? 1e-12 * scale : mu * 10.0;
    require(mu < 1e6 * scale, ErrorCode::singular, "Newton system could not be regularized");
    Mat Md = M;
    Md.diagonal().array() += mu;
    llt.compute(Md.selfadjointView<Eigen::Lower>());
  }
  return llt.solve(-pt.grad - prob.form().kappa.cwiseProduct(pt.beta));
}

Vec newton_direction_cg(const Problem& prob, const Point& pt) {
  const Mat& X = prob.data().X;
  const double n = prob.n();
  const Vec w = prob.hessian_weights(pt);
  const Vec& kappa = prob.form().kappa;
  const double r1 = prob.rank_one_weight(pt);
  Vec g1;
  if (r1 > 0) g1 = X.transpose() * pt.u;
  auto apply = [&](const Vec& v) {
    Vec out = X.transpose() * (w.cwiseProduct(X * v)) / n + kappa.cwiseProduct(v);
    if (r1 > 0) out += r1 * g1.dot(v) * g1;
    return out;
  };
  Vec diag = (X.array().square().matrix().transpose() * w) / n + kappa;
  if (r1 > 0) diag += r1 * g1.cwiseAbs2();
  diag = diag.cwiseMax(1e-300);

  const Vec b = -pt.grad - kappa.cwiseProduct(pt.beta);
  const double bnorm = b.norm();
  Vec x = Vec::Zero(b.size());
  if (bnorm == 0.0) return x;
  const double eta = std::min(1e-2, std::sqrt(bnorm)) * 1e-2;
  Vec r = b;
  Vec z = r.cwiseQuotient(diag);
  Vec d = z;
  double rz = r.dot(z);
  const Index max_cg = std::max<Index>(50, 2 * b.size());
  for (Index k = 0; k < max_cg; ++k) {
    const Vec Hd = apply(d);
    const double dHd = d.dot(Hd);
    if (!(dHd > 0)) break;
    const double a = rz / dHd;
    x += a * d;
    r -= a * Hd;
    if (r.norm() <= eta * bnorm) break;
    z = r.cwiseQuotient(diag);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  if (x.squaredNorm() == 0.0) x = b.cwiseQuotient(diag);
  return x;
}

FitResult finish(const Problem& prob, const Point& pt, const Loss& loss, const Penalty& penalty,
                 std::optional<double> K, int iterations, std::vector<double> trace) {
  FitResult r;
  r.beta = pt.beta;
  r.u = pt.u;
  r.psi = -loss.d1(prob.data().y, pt.u);
  r.curvature = loss.d2(prob.data().y, pt.u);
  r.objective = pt.total;
  r.kkt_residual = pt.kkt;
  r.converged = true;
  r.coercive_K = K;
  r.guard_active = K.has_value() && pt.level > 0;
  r.iterations = iterations;
  r.trace = std::move(trace);
  r.loss = loss;
  r.penalty = penalty;
  r.form = prob.form();
  const Index p = pt.beta.size();
  for (Index j = 0; j < p; ++j)
    if (prob.form().smooth() || pt.beta(j) != 0.0) r.active.push_back(j);
  return r;
}

FitResult solve_newton(const Problem& prob, const Loss& loss, const Penalty& penalty, const SolverConfig& cfg,
                       const GramCache* gram, Vec beta0) {
  const Index p = prob.data().p();
  bool use_cholesky;
  switch (cfg.linear_solver) {
    case LinearSolver::cholesky: use_cholesky = true; break;
    case LinearSolver::conjugate_gradient: use_cholesky = false; break;
    default:
      use_cholesky = p <= 300 || gram != nullptr || !prob.form().strongly_convex() || prob.guarded();
  }
  Point pt = prob.at(beta0);
  std::vector<double> trace;
  for (int it = 0; it <= cfg.max_iter; ++it) {
    trace.push_back(pt.kkt);
    if (!std::isfinite(pt.total)) fail(ErrorCode::not_converged, "objective became non-finite");
    if (pt.kkt <= cfg.kkt_tol) return finish(prob, pt, loss, penalty, cfg.coercive_K, it, trace);
    check_divergence(prob, pt, cfg);
    if (it == cfg.max_iter) break;
    const Vec d = use_cholesky ? newton_direction_cholesky(prob, pt, gram) : newton_direction_cg(prob, pt);
    const Vec full_grad = pt.grad + prob.form().kappa.cwiseProduct(pt.beta);
    double decrease = full_grad.dot(d);
    if (!(decrease < 0)) decrease = 0.0;
    const Vec Xd = prob.data().X * d;
    if (!line_search(prob, pt, d, Xd, decrease, cfg)) break;
  }
  fail_not_converged("newton", trace, prob.form().smooth() && !prob.form().strongly_convex());
}

// Proximal Newton: quadratic model of the smooth part, minimized over the
// penalty by cyclic coordinate descent with active-set sweeps.
FitResult solve_prox_newton(const Problem& prob, const Loss& loss, const Penalty& penalty,
                            const SolverConfig& cfg, Vec beta0) {
  require(!prob.guarded(), ErrorCode::unsupported, "coordinate descent does not support the coercive guard");
  const Mat& X = prob.data().X;
  const Index n = X.rows(), p = X.cols();
  const double dn = prob.n();
  const SeparableForm& f = prob.form();
  Point pt = prob.at(beta0);
  std::vector<double> trace;
  Vec a(p), t(p), w(n), v(n);
  for (int it = 0; it <= cfg.max_iter; ++it) {
    trace.push_back(pt.kkt);
    if (!std::isfinite(pt.total)) fail(ErrorCode::not_converged, "objective became non-finite");
    if (pt.kkt <= cfg.kkt_tol) return finish(prob, pt, loss, penalty, cfg.coercive_K, it, trace);
    check_divergence(prob, pt, cfg);
    if (it == cfg.max_iter) break;

    const Vec D = loss.d2(prob.data().y, pt.u);
    a = (X.array().square().matrix().transpose() * D) / dn;
    const double mu = 1e-10 * std::max(1.0, a.maxCoeff());
    a.array() += mu;
    t = pt.beta;
    w.setZero();
    v.setZero();
    const double inner_tol = std::max(1e-16, 0.05 * pt.kkt_abs);

    auto update = [&](Index j) {
      const double partial = pt.grad(j) + X.col(j).dot(v) / dn + mu * (t(j) - pt.beta(j));
      const double nt = soft_threshold(a(j) * t(j) - partial, f.alpha(j)) / (a(j) + f.kappa(j));
      const double delta = nt - t(j);
      if (delta != 0.0) {
        t(j) = nt;
        w.noalias() += delta * X.col(j);
        v.array() += delta * D.array() * X.col(j).array();
      }
      return std::abs(delta) * (a(j) + f.kappa(j));
    };

    std::vector<Index> active;
    for (int outer = 0; outer < 1000; ++outer) {
      double change = 0.0;
      for (Index j = 0; j < p; ++j) change = std::max(change, update(j));
      if (change <= inner_tol) break;
      active.clear();
      for (Index j = 0; j < p; ++j)
        if (t(j) != 0.0) active.push_back(j);
      for (int sweep = 0; sweep < 10000; ++sweep) {
        double c = 0.0;
        for (Index j : active) c = std::max(c, update(j));
        if (c <= inner_tol) break;
      }
    }

    const Vec d = t - pt.beta;
    const double decrease =
        pt.grad.dot(d) + f.value(t) - f.value(pt.beta);
    if (!line_search(prob, pt, d, w, std::min(decrease, 0.0), cfg)) break;
    // Snap coordinates that the model zeroed so the support is exact.
    if (!f.smooth()) {
      bool snapped = false;
      for (Index j = 0; j < p; ++j)
        if (t(j) == 0.0 && pt.beta(j) != 0.0 && std::abs(pt.beta(j)) < 1e-14) {
          pt.beta(j) = 0.0;
          snapped = true;
        }
      if (snapped) pt = prob.at(pt.beta);
    }
  }
  fail_not_converged("coordinate descent", trace, false);
}

double power_max_eig_gram(const Mat& X) {
  const Index p = X.cols();
  Vec v(p);
  for (Index j = 0; j < p; ++j) v(j) = 1.0 + 0.01 * static_cast<double>(j % 7);
  v.normalize();
  double lam = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vec nv = X.transpose() * (X * v);
    lam = nv.norm();
    if (lam == 0.0) return 0.0;
    v = nv / lam;
  }
  return lam;
}

FitResult solve_fista(const Problem& prob, const Loss& loss, const Penalty& penalty, const SolverConfig& cfg,
                      Vec beta0) {
  require(!prob.guarded(), ErrorCode::unsupported, "prox-gradient does not support the coercive guard");
  const Mat& X = prob.data().X;
  const SeparableForm& f = prob.form();
  const double n = prob.n();
  double L = std::max(1e-12, loss.lipschitz() * power_max_eig_gram(X) / n);
  Point x = prob.at(beta0);
  Vec y = x.beta, yu = x.u;
  double tk = 1.0;
  std::vector<double> trace;
  for (int it = 0; it < cfg.max_first_order_iter; ++it) {
    if (it % 10 == 0) trace.push_back(x.kkt);
    if (x.kkt <= cfg.kkt_tol) return finish(prob, x, loss, penalty, std::nullopt, it, trace);
    check_divergence(prob, x, cfg);
    const double fy = loss.sum(prob.data().y, yu) / n;
    const Vec gy = X.transpose() * loss.d1(prob.data().y, yu) / n;
    Point nx;
    for (;;) {
      nx.beta = f.prox(1.0 / L, y - gy / L);
      nx.u = X * nx.beta;
      const Vec diff = nx.beta - y;
      const double fx = loss.sum(prob.data().y, nx.u) / n;
      if (fx <= fy + gy.dot(diff) + 0.5 * L * diff.squaredNorm() + 1e-12 * (1.0 + std::abs(fy))) break;
      L *= 2.0;
    }
    prob.evaluate(nx);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    if (nx.total > x.total + 1e-12 * (1.0 + std::abs(x.total))) {
      // Momentum restart.
      tk = 1.0;
      y = x.beta;
      yu = x.u;
      continue;
    }
    y = nx.beta + ((tk - 1.0) / tn) * (nx.beta - x.beta);
    yu = nx.u + ((tk - 1.0) / tn) * (nx.u - x.u);
    tk = tn;
    x = std::move(nx);
  }
  fail_not_converged("prox-gradient", trace, false);
}

}  // namespace

double objective(const Dataset& data, const Loss& loss, const SeparableForm& form, const Vec& beta,
                 std::optional<double> coercive_K) {
  Problem prob(data, loss, form, coercive_K);
  return prob.smooth_value(data.X * beta) + form.value(beta);
}

FitResult fit(const Dataset& data, const Loss& loss, const Penalty& penalty, const SolverConfig& cfg,
              const GramCache* gram) {
  data.validate();
  loss.check_responses(data.y);
  penalty.validate();
  require(cfg.kkt_tol > 0, ErrorCode::invalid_argument, "kkt tolerance must be positive");
  require(cfg.max_iter >= 1, ErrorCode::invalid_argument, "max_iter must be positive");
  const Index n = data.n(), p = data.p();
  const SeparableForm form = penalty.resolve(n, p);
  if (cfg.coercive_K) {
    require(*cfg.coercive_K > 0, ErrorCode::invalid_argument, "coercive level K must be positive");
    require(penalty.kind == PenaltyKind::none, ErrorCode::unsupported, "the coercive guard applies to unpenalized fits");
  }
  if (penalty.kind == PenaltyKind::none)
    require(p < n, ErrorCode::unsupported, "an unpenalized fit needs p < n");
  if (gram)
    require(gram->gram.rows() == p && gram->gram.cols() == p, ErrorCode::dimension_mismatch, "gram cache size");

  Vec beta0 = Vec::Zero(p);
  if (!cfg.warm_start.empty()) {
    require(static_cast<Index>(cfg.warm_start.size()) == p, ErrorCode::dimension_mismatch, "warm start length");
    beta0 = Eigen::Map<const Vec>(cfg.warm_start.data(), p);
  }
  Problem prob(data, loss, form, cfg.coercive_K);
  Algorithm algo = cfg.algorithm;
  if (algo == Algorithm::automatic) algo = form.smooth() ? Algorithm::newton : Algorithm::coordinate_descent;
  switch (algo) {
    case Algorithm::newton:
      require(form.smooth(), ErrorCode::unsupported, "Newton needs a smooth penalty; use coordinate descent");
      return solve_newton(prob, loss, penalty, cfg, gram, beta0);
    case Algorithm::coordinate_descent:
      return solve_prox_newton(prob, loss, penalty, cfg, beta0);
    case Algorithm::prox_gradient:
      return solve_fista(prob, loss, penalty, cfg, beta0);
    default:
      break;
  }
  fail(ErrorCode::invalid_argument, "unknown algorithm");
}

FitResult fit_coercive(const Dataset& data, const Loss& loss, double K, SolverConfig cfg) {
  require(data.p() < data.n(), ErrorCode::unsupported, "the coercive guard needs p < n");
  cfg.coercive_K = K;
  cfg.algorithm = Algorithm::newton;
  return fit(data, loss, Penalty::none(), cfg);
}

FitResult evaluate_fit(const Dataset& data, const Loss& loss, const Penalty& penalty, const Vec& beta,
                       std::optional<double> coercive_K) {
  data.validate();
  loss.check_responses(data.y);
  require(beta.size() == data.p(), ErrorCode::dimension_mismatch, "coefficient length mismatch");
  const SeparableForm form = penalty.resolve(data.n(), data.p());
  Problem prob(data, loss, form, coercive_K);
  const Point pt = prob.at(beta);
  FitResult r = finish(prob, pt, loss, penalty, coercive_K, 0, {pt.kkt});
  r.converged = pt.kkt <= 1e-6;
  return r;
}

double kkt_residual(const FitResult& fit, const Dataset& data) {
  Problem prob(data, fit.loss, fit.form, fit.coercive_K);
  return prob.at(fit.beta).kkt;
}

Vec penalty_subgrad_from_kkt(const FitResult& fit, const Dataset& data, double tol) {
  Problem prob(data, fit.loss, fit.form, fit.coercive_K);
  const Point pt = prob.at(fit.beta);
  if (pt.kkt > tol) {
    std::ostringstream os;
    os << "X'psi/n is not in the subdifferential of the penalty (residual " << pt.kkt << ")";
    throw KktViolation(pt.kkt, os.str());
  }
  return data.X.transpose() * fit.psi / static_cast<double>(data.n());
}

}  // namespace obsadj
