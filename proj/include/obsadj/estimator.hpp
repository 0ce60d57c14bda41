#pragma once

#include "obsadj/common.hpp"
#include "obsadj/loss.hpp"
#include "obsadj/model.hpp"
#include "obsadj/penalty.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace obsadj {

enum class Algorithm { automatic, newton, prox_gradient, coordinate_descent };
enum class LinearSolver { automatic, cholesky, conjugate_gradient };

Algorithm parse_algorithm(const std::string& s);
std::string to_string(Algorithm a);

struct SolverConfig {
  Algorithm algorithm = Algorithm::automatic;
  LinearSolver linear_solver = LinearSolver::automatic;
  int max_iter = 100;             // outer Newton / prox-Newton iterations
  int max_first_order_iter = 200000;
  double kkt_tol = 1e-8;          // relative, see kkt_residual()
  double armijo = 1e-4;
  double backtrack = 0.5;
  // |Xb|^2/n beyond this without strong convexity is treated as divergence.
  double divergence_level = 1e4;
  std::optional<double> coercive_K;
  std::vector<double> warm_start;  // optional initial beta
};

/// Solution of min_b (1/n) sum_i l_{y_i}(x_i'b) + g(b) [+ H((|Xb|^2/n - K)/2)].
struct FitResult {
  Vec beta;
  Vec u;          // X beta
  Vec psi;        // -l'_y(X beta)
  Vec curvature;  // l''_y(X beta)
  std::vector<Index> active;
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  bool guard_active = false;
  std::optional<double> coercive_K;
  int iterations = 0;
  std::vector<double> trace;  // KKT residual per outer iteration

  Loss loss = Loss::square();
  Penalty penalty;
  SeparableForm form;
};

// Smooth step used by the coercive guard and its integral.
double guard_h(double t);        // 0, 3t^2 - 2t^3, 1
double guard_hprime(double t);   // 6t - 6t^2 on [0, 1]
double guard_H(double t);        // t^3 - t^4/2 on [0, 1], t - 1/2 above

/// Optional cache of X'X for repeated square-loss fits on one design.
///
/// Also keeps the Cholesky factor of the last requested X'X + diag(shift),
/// so one instance must not be shared between threads.
struct GramCache {
  Mat gram;

  // nullptr when the shifted Gram matrix is not numerically positive definite.
  const Eigen::LLT<Mat>* factor(const Vec& shift) const;

 private:
  mutable Vec shift_;
  mutable std::shared_ptr<Eigen::LLT<Mat>> llt_;
};
GramCache make_gram_cache(const Mat& X);

FitResult fit(const Dataset& data, const Loss& loss, const Penalty& penalty, const SolverConfig& cfg,
              const GramCache* gram = nullptr);

// Unpenalized fit with the coercive guard at level K. Requires p < n.
FitResult fit_coercive(const Dataset& data, const Loss& loss, double K, SolverConfig cfg);

// Rebuilds a FitResult (psi, curvature, active set, KKT residual) from beta.
FitResult evaluate_fit(const Dataset& data, const Loss& loss, const Penalty& penalty, const Vec& beta,
                       std::optional<double> coercive_K = std::nullopt);

double objective(const Dataset& data, const Loss& loss, const SeparableForm& form, const Vec& beta,
                 std::optional<double> coercive_K = std::nullopt);

// Infinity-norm distance from X'psi/n (minus the guard gradient) to the
// subdifferential of g at beta, divided by max(1, |X'psi|_inf / n).
double kkt_residual(const FitResult& fit, const Dataset& data);

// X'psi/n; throws KktViolation if it is farther than tol from the
// subdifferential of g at beta (relative, as in kkt_residual).
Vec penalty_subgrad_from_kkt(const FitResult& fit, const Dataset& data, double tol = 1e-6);

}  // namespace obsadj
