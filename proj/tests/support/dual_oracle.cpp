#include "support/dual_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace affect::test {

namespace {

double rbf(const double* a, const double* b, int dim, double gamma) {
  double d2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double diff = a[k] - b[k];
    d2 += diff * diff;
  }
  return std::exp(-gamma * d2);
}

/// Projection of v onto { 0 <= a <= C, y^T a = 0 } via bisection on the
/// hyperplane multiplier: a(lambda) = clamp(v - lambda*y, 0, C) and
/// y^T a(lambda) is non-increasing in lambda.
std::vector<double> project(const std::vector<double>& v, const std::vector<int>& y, double c) {
  auto value = [&](double lambda) {
    double s = 0.0;
    for (size_t t = 0; t < v.size(); ++t)
      s += y[t] * std::clamp(v[t] - lambda * y[t], 0.0, c);
    return s;
  };
  double lo = 0.0, hi = 0.0;
  for (double x : v) hi = std::max(hi, std::fabs(x));
  hi += c + 1.0;
  lo = -hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (value(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  std::vector<double> out(v.size());
  for (size_t t = 0; t < v.size(); ++t) out[t] = std::clamp(v[t] - lambda * y[t], 0.0, c);
  return out;
}

double objective_min(const DualProblem& prob, const std::vector<double>& a) {
  const size_t n = a.size();
  double quad = 0.0, lin = 0.0;
  for (size_t t = 0; t < n; ++t) {
    double row = 0.0;
    for (size_t u = 0; u < n; ++u) row += prob.q[t][u] * a[u];
    quad += a[t] * row;
    lin += prob.p[t] * a[t];
  }
  return 0.5 * quad + lin;
}

std::vector<double> gradient(const DualProblem& prob, const std::vector<double>& a) {
  const size_t n = a.size();
  std::vector<double> g(n);
  for (size_t t = 0; t < n; ++t) {
    double row = prob.p[t];
    for (size_t u = 0; u < n; ++u) row += prob.q[t][u] * a[u];
    g[t] = row;
  }
  return g;
}

double spectral_norm(const std::vector<std::vector<double>>& q) {
  const size_t n = q.size();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 1.0;
  for (int it = 0; it < 300; ++it) {
    std::vector<double> w(n, 0.0);
    for (size_t t = 0; t < n; ++t)
      for (size_t u = 0; u < n; ++u) w[t] += q[t][u] * v[u];
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= 0.0) return 1.0;
    for (size_t t = 0; t < n; ++t) v[t] = w[t] / norm;
    lambda = norm;
  }
  return lambda;
}

}  // namespace

DualProblem svr_dual_problem(const Matrix& x, const std::vector<double>& targets, double gamma,
                             double c, double epsilon) {
  const int l = x.rows;
  DualProblem prob;
  prob.c = c;
  const int n = 2 * l;
  prob.q.assign(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
  prob.p.resize(static_cast<size_t>(n));
  prob.y.resize(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    const int sign_t = t < l ? 1 : -1;
    prob.y[static_cast<size_t>(t)] = sign_t;
    prob.p[static_cast<size_t>(t)] =
        sign_t > 0 ? epsilon - targets[static_cast<size_t>(t)] : epsilon + targets[static_cast<size_t>(t - l)];
    for (int u = 0; u < n; ++u) {
      const int sign_u = u < l ? 1 : -1;
      prob.q[static_cast<size_t>(t)][static_cast<size_t>(u)] =
          sign_t * sign_u * rbf(x.row(t % l), x.row(u % l), x.cols, gamma);
    }
  }
  return prob;
}

DualProblem svc_dual_problem(const Matrix& x, const std::vector<int>& labels, double gamma,
                             double c) {
  const int l = x.rows;
  DualProblem prob;
  prob.c = c;
  prob.q.assign(static_cast<size_t>(l), std::vector<double>(static_cast<size_t>(l), 0.0));
  prob.p.assign(static_cast<size_t>(l), -1.0);
  prob.y = labels;
  for (int t = 0; t < l; ++t)
    for (int u = 0; u < l; ++u)
      prob.q[static_cast<size_t>(t)][static_cast<size_t>(u)] =
          labels[static_cast<size_t>(t)] * labels[static_cast<size_t>(u)] *
          rbf(x.row(t), x.row(u), x.cols, gamma);
  return prob;
}

OracleSolution solve_dual(const DualProblem& prob, int max_iter, double tol) {
  const size_t n = prob.p.size();
  const double lipschitz = std::max(spectral_norm(prob.q), 1e-12);
  const double step = 1.0 / lipschitz;

  std::vector<double> a = project(std::vector<double>(n, 0.0), prob.y, prob.c);
  std::vector<double> z = a;
  double t_momentum = 1.0;
  double obj = objective_min(prob, a);

  OracleSolution sol;
  int it = 0;
  for (; it < max_iter; ++it) {
    // Stationarity via the gradient mapping at the current point.
    const auto g_here = gradient(prob, a);
    std::vector<double> probe(n);
    for (size_t t = 0; t < n; ++t) probe[t] = a[t] - step * g_here[t];
    probe = project(probe, prob.y, prob.c);
    double mapping = 0.0;
    for (size_t t = 0; t < n; ++t) mapping = std::max(mapping, std::fabs(probe[t] - a[t]));
    if (mapping <= tol) break;

    const auto g = gradient(prob, z);
    std::vector<double> cand(n);
    for (size_t t = 0; t < n; ++t) cand[t] = z[t] - step * g[t];
    cand = project(cand, prob.y, prob.c);
    double cand_obj = objective_min(prob, cand);
    if (cand_obj > obj) {
      cand = probe;  // plain projected step from a
      cand_obj = objective_min(prob, cand);
      t_momentum = 1.0;
      if (cand_obj > obj) {
        a = probe;
        obj = cand_obj;
        z = a;
        continue;
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    const double beta = (t_momentum - 1.0) / t_next;
    for (size_t t = 0; t < n; ++t) z[t] = cand[t] + beta * (cand[t] - a[t]);
    t_momentum = t_next;
    a = std::move(cand);
    obj = cand_obj;
  }

  sol.a = a;
  sol.iterations = it;
  sol.objective = -objective_min(prob, a);

  // Bias from stationarity on free variables; fall back to the feasibility
  // interval midpoint.
  const auto g = gradient(prob, a);
  double sum_free = 0.0;
  int n_free = 0;
  double ub = std::numeric_limits<double>::infinity(), lb = -ub;
  for (size_t t = 0; t < n; ++t) {
    const double yg = prob.y[t] * g[t];
    // Free means strictly inside the box, with a little slack for the
    // iterative solve.
    const double slack = 1e-9 * (1.0 + prob.c);
    if (a[t] > slack && a[t] < prob.c - slack) {
      sum_free += yg;
      ++n_free;
    } else if (a[t] <= slack) {
      if (prob.y[t] > 0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else {
      if (prob.y[t] < 0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free
                                : (std::isfinite(ub) && std::isfinite(lb) ? 0.5 * (ub + lb) : 0.0);
  sol.bias = -rho;
  return sol;
}

std::vector<double> oracle_svr_coeffs(const OracleSolution& sol, int l) {
  std::vector<double> beta(static_cast<size_t>(l));
  for (int i = 0; i < l; ++i)
    beta[static_cast<size_t>(i)] = sol.a[static_cast<size_t>(i)] - sol.a[static_cast<size_t>(i + l)];
  return beta;
}

}  // namespace affect::test
