#pragma once

#include <vector>

#include "affect/types.hpp"

namespace affect::test {

/// Reference solver for the kernel-machine duals:
///   min 1/2 a^T Q a + p^T a   s.t.  0 <= a <= C,  y^T a = 0.
/// Dense accelerated projected gradient with an exact bisection projection
/// onto the box/hyperplane intersection. Shares no code with the SMO
/// trainer; used to cross-check its dual objectives.
struct DualProblem {
  std::vector<std::vector<double>> q;
  std::vector<double> p;
  std::vector<int> y;
  double c = 1.0;
};

struct OracleSolution {
  std::vector<double> a;
  double objective = 0.0;  // ascent value: -(1/2 a^T Q a + p^T a)
  double bias = 0.0;
  int iterations = 0;
};

/// SVR dual in the same 2l-variable layout as the trainer (upper tube side
/// first, then lower).
DualProblem svr_dual_problem(const Matrix& x, const std::vector<double>& targets, double gamma,
                             double c, double epsilon);

DualProblem svc_dual_problem(const Matrix& x, const std::vector<int>& labels, double gamma,
                             double c);

OracleSolution solve_dual(const DualProblem& prob, int max_iter = 2000000, double tol = 1e-12);

/// SVR coefficients beta_i = a_i - a_{i+l} from an oracle solution.
std::vector<double> oracle_svr_coeffs(const OracleSolution& sol, int l);

}  // namespace affect::test
