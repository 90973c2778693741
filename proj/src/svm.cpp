#include "affect/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace affect {

void KernelParams::validate(bool for_svr) const {
  if (!(gamma > 0.0)) throw ValidationError("kernel gamma must be > 0");
  if (!(c > 0.0)) throw ValidationError("box constraint C must be > 0");
  if (for_svr && epsilon < 0.0) throw ValidationError("epsilon must be >= 0");
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) throw ValidationError("rbf_kernel: dimension mismatch");
  if (gamma < 0.0) throw ValidationError("rbf_kernel: gamma must be >= 0");
  double d2 = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    d2 += diff * diff;
  }
  return std::exp(-gamma * d2);
}

KernelCache::KernelCache(const Matrix& x, double gamma, size_t max_rows)
    : x_(x), gamma_(gamma), max_rows_(max_rows == 0 ? static_cast<size_t>(x.rows) : max_rows) {
  if (max_rows_ < 2) max_rows_ = 2;  // the working pair must coexist
  sq_norms_.resize(static_cast<size_t>(x.rows));
  for (int i = 0; i < x.rows; ++i) {
    double s = 0.0;
    const double* r = x.row(i);
    for (int c = 0; c < x.cols; ++c) s += r[c] * r[c];
    sq_norms_[static_cast<size_t>(i)] = s;
  }
}

const std::vector<double>& KernelCache::row(int i) {
  auto it = index_.find(i);
  if (it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return lru_.front().second;
  }
  std::vector<double> krow(static_cast<size_t>(x_.rows));
  const double* xi = x_.row(i);
  const double sqi = sq_norms_[static_cast<size_t>(i)];
  for (int j = 0; j < x_.rows; ++j) {
    if (j == i) {
      krow[static_cast<size_t>(j)] = 1.0;
      continue;
    }
    const double* xj = x_.row(j);
    double dot = 0.0;
    for (int c = 0; c < x_.cols; ++c) dot += xi[c] * xj[c];
    const double d2 = std::max(sqi + sq_norms_[static_cast<size_t>(j)] - 2.0 * dot, 0.0);
    krow[static_cast<size_t>(j)] = std::exp(-gamma_ * d2);
  }
  evaluations_ += x_.rows;
  lru_.emplace_front(i, std::move(krow));
  index_[i] = lru_.begin();
  if (lru_.size() > max_rows_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  return lru_.front().second;
}

namespace {

constexpr double kCurvatureFloor = 1e-12;

/// Dual problem min 1/2 a^T Q a + p^T a, 0 <= a <= C, sign^T a = 0, with
/// Q_ts = sign_t sign_s K(base(t), base(s)). For SVC the variables map to
/// rows one-to-one; for SVR there are 2l variables (upper/lower tube side)
/// over l base rows.
struct SmoState {
  int n = 0;              // dual variables
  int base = 0;           // base kernel rows (n or n/2)
  double c = 0.0;
  std::vector<double> p;
  std::vector<int8_t> sign;
  std::vector<double> a;
  std::vector<double> grad;  // Q a + p
};

void expand_q_row(const SmoState& s, const std::vector<double>& krow, int t,
                  std::vector<double>& buf) {
  const int8_t st = s.sign[static_cast<size_t>(t)];
  for (int u = 0; u < s.n; ++u)
    buf[static_cast<size_t>(u)] =
        st * s.sign[static_cast<size_t>(u)] * krow[static_cast<size_t>(u % s.base)];
}

/// Maximal violating pair: i maximizes -sign*grad over I_up, j minimizes it
/// over I_low. Returns the gap m - M (-inf when either set is empty).
double select_pair(const SmoState& s, int& out_i, int& out_j) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double m = -kInf, big_m = kInf;
  out_i = out_j = -1;
  for (int t = 0; t < s.n; ++t) {
    const double v = -s.sign[static_cast<size_t>(t)] * s.grad[static_cast<size_t>(t)];
    const bool at_upper = s.a[static_cast<size_t>(t)] >= s.c;
    const bool at_lower = s.a[static_cast<size_t>(t)] <= 0.0;
    const bool in_up = s.sign[static_cast<size_t>(t)] > 0 ? !at_upper : !at_lower;
    const bool in_low = s.sign[static_cast<size_t>(t)] > 0 ? !at_lower : !at_upper;
    if (in_up && v > m) {
      m = v;
      out_i = t;
    }
    if (in_low && v < big_m) {
      big_m = v;
      out_j = t;
    }
  }
  if (out_i < 0 || out_j < 0) return -kInf;
  return m - big_m;
}

double dual_ascent_value(const SmoState& s) {
  // 1/2 a^T Q a + p^T a = 1/2 a^T (grad + p); reported with the ascent sign.
  std::vector<double> terms(static_cast<size_t>(s.n));
  for (int t = 0; t < s.n; ++t)
    terms[static_cast<size_t>(t)] =
        0.5 * s.a[static_cast<size_t>(t)] *
        (s.grad[static_cast<size_t>(t)] + s.p[static_cast<size_t>(t)]);
  return -stable_sum(terms);
}

struct SmoRunResult {
  bool converged = false;
  double gap = 0.0;
};

/// Runs pair updates until the violating-pair gap drops to tol or the
/// update budget runs out. State (a, grad) is carried in and out so the
/// caller can post-process and resume.
SmoRunResult smo_run(SmoState& s, KernelCache& kernel, double tol, long long& budget,
                     long long& used, bool track, std::vector<double>* trace) {
  std::vector<double> qi(static_cast<size_t>(s.n)), qj(static_cast<size_t>(s.n));
  const long long sweep = std::max(1, s.n);
  SmoRunResult res;
  for (;;) {
    int i = -1, j = -1;
    const double gap = select_pair(s, i, j);
    res.gap = gap;
    if (gap <= tol) {
      res.converged = true;
      return res;
    }
    if (budget <= 0) return res;
    --budget;
    ++used;

    expand_q_row(s, kernel.row(i % s.base), i, qi);
    expand_q_row(s, kernel.row(j % s.base), j, qj);

    double& ai = s.a[static_cast<size_t>(i)];
    double& aj = s.a[static_cast<size_t>(j)];
    const double old_ai = ai, old_aj = aj;
    const double gi = s.grad[static_cast<size_t>(i)], gj = s.grad[static_cast<size_t>(j)];

    if (s.sign[static_cast<size_t>(i)] != s.sign[static_cast<size_t>(j)]) {
      double quad = qi[static_cast<size_t>(i)] + qj[static_cast<size_t>(j)] +
                    2.0 * qi[static_cast<size_t>(j)];
      if (quad <= 0.0) quad = kCurvatureFloor;
      const double delta = (-gi - gj) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > 0.0) {
        if (ai > s.c) { ai = s.c; aj = s.c - diff; }
      } else {
        if (aj > s.c) { aj = s.c; ai = s.c + diff; }
      }
    } else {
      double quad = qi[static_cast<size_t>(i)] + qj[static_cast<size_t>(j)] -
                    2.0 * qi[static_cast<size_t>(j)];
      if (quad <= 0.0) quad = kCurvatureFloor;
      const double delta = (gi - gj) / quad;
      const double total = ai + aj;
      ai -= delta;
      aj += delta;
      if (total > s.c) {
        if (ai > s.c) { ai = s.c; aj = total - s.c; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = total; }
      }
      if (total > s.c) {
        if (aj > s.c) { aj = s.c; ai = total - s.c; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = total; }
      }
    }

    const double dai = ai - old_ai, daj = aj - old_aj;
    for (int t = 0; t < s.n; ++t)
      s.grad[static_cast<size_t>(t)] +=
          qi[static_cast<size_t>(t)] * dai + qj[static_cast<size_t>(t)] * daj;

    if (track && trace != nullptr && used % sweep == 0) trace->push_back(dual_ascent_value(s));
  }
}

struct BiasInfo {
  int n_free = 0;
  double rho = 0.0;
};

BiasInfo compute_rho(const SmoState& s) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  int n_free = 0;
  for (int t = 0; t < s.n; ++t) {
    const double yg = s.sign[static_cast<size_t>(t)] * s.grad[static_cast<size_t>(t)];
    if (s.a[static_cast<size_t>(t)] >= s.c) {
      if (s.sign[static_cast<size_t>(t)] < 0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else if (s.a[static_cast<size_t>(t)] <= 0.0) {
      if (s.sign[static_cast<size_t>(t)] > 0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  BiasInfo info;
  info.n_free = n_free;
  if (n_free > 0)
    info.rho = sum_free / n_free;
  else if (std::isfinite(ub) && std::isfinite(lb))
    info.rho = 0.5 * (ub + lb);
  else
    info.rho = 0.0;
  return info;
}

void fill_report(TrainReport& report, const SmoState& s, bool converged, long long used,
                 double gap) {
  report.converged = converged;
  report.pair_updates = used;
  report.dual_objective = dual_ascent_value(s);
  report.kkt_violation = std::max(gap, 0.0);
}

}  // namespace

SvrTrainResult train_svr(const Matrix& x, const std::vector<double>& y,
                         const KernelParams& params, const TrainOptions& opts) {
  params.validate(true);
  const int l = x.rows;
  if (l < 1) throw ValidationError("train_svr: empty training set");
  if (static_cast<int>(y.size()) != l) throw ValidationError("train_svr: target length mismatch");
  for (double v : y)
    if (!std::isfinite(v)) throw ValidationError("train_svr: non-finite target");

  SmoState s;
  s.n = 2 * l;
  s.base = l;
  s.c = params.c;
  s.p.resize(static_cast<size_t>(s.n));
  s.sign.resize(static_cast<size_t>(s.n));
  for (int i = 0; i < l; ++i) {
    s.p[static_cast<size_t>(i)] = params.epsilon - y[static_cast<size_t>(i)];
    s.sign[static_cast<size_t>(i)] = 1;
    s.p[static_cast<size_t>(i + l)] = params.epsilon + y[static_cast<size_t>(i)];
    s.sign[static_cast<size_t>(i + l)] = -1;
  }
  s.a.assign(static_cast<size_t>(s.n), 0.0);
  s.grad = s.p;

  KernelCache kernel(x, params.gamma, opts.cache_rows);
  SvrTrainResult result;
  long long budget = opts.max_pair_updates;
  long long used = 0;
  SmoRunResult run;
  for (;;) {
    run = smo_run(s, kernel, opts.kkt_tol, budget, used,
                  opts.track_dual, &result.report.dual_trace);
    if (!run.converged) break;
    // Shift shared mass off the paired tube-side variables. This leaves the
    // coefficients beta and the gradient unchanged and never increases the
    // objective, but it can change the bound sets, so recheck the gap.
    bool changed = false;
    for (int i = 0; i < l; ++i) {
      double& up = s.a[static_cast<size_t>(i)];
      double& dn = s.a[static_cast<size_t>(i + l)];
      const double shared = std::min(up, dn);
      if (shared > 0.0) {
        up -= shared;
        dn -= shared;
        changed = true;
      }
    }
    if (!changed) break;
    int i, j;
    if (select_pair(s, i, j) <= opts.kkt_tol) break;
  }
  fill_report(result.report, s, run.converged, used, run.gap);

  std::vector<int> sv_rows;
  for (int i = 0; i < l; ++i)
    if (s.a[static_cast<size_t>(i)] != s.a[static_cast<size_t>(i + l)]) sv_rows.push_back(i);
  result.model.params = params;
  result.model.support_vectors = x.select_rows(sv_rows);
  result.model.dual_coeffs.reserve(sv_rows.size());
  for (int i : sv_rows)
    result.model.dual_coeffs.push_back(s.a[static_cast<size_t>(i)] -
                                       s.a[static_cast<size_t>(i + l)]);

  const BiasInfo bias = compute_rho(s);
  if (bias.n_free > 0) {
    result.model.bias = -bias.rho;
  } else {
    result.model.bias = stable_sum(y) / l;  // any value in the feasible slab works
  }
  return result;
}

double predict_svr(const SvrModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.support_vectors.cols)
    throw ValidationError("predict_svr: dimension mismatch");
  std::vector<double> terms(model.dual_coeffs.size());
  for (size_t i = 0; i < model.dual_coeffs.size(); ++i)
    terms[i] = model.dual_coeffs[i] *
               rbf_kernel(model.support_vectors.row_span(static_cast<int>(i)), x,
                          model.params.gamma);
  return stable_sum(terms) + model.bias;
}

SvcTrainResult train_svc(const Matrix& x, const std::vector<int>& y,
                         const KernelParams& params, const TrainOptions& opts) {
  params.validate(false);
  const int l = x.rows;
  if (l < 1) throw ValidationError("train_svc: empty training set");
  if (static_cast<int>(y.size()) != l) throw ValidationError("train_svc: label length mismatch");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1)
      has_pos = true;
    else if (v == -1)
      has_neg = true;
    else
      throw ValidationError("train_svc: labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw ValidationError("train_svc: both classes must be present");

  SmoState s;
  s.n = l;
  s.base = l;
  s.c = params.c;
  s.p.assign(static_cast<size_t>(l), -1.0);
  s.sign.resize(static_cast<size_t>(l));
  for (int i = 0; i < l; ++i) s.sign[static_cast<size_t>(i)] = static_cast<int8_t>(y[static_cast<size_t>(i)]);
  s.a.assign(static_cast<size_t>(l), 0.0);
  s.grad = s.p;

  KernelCache kernel(x, params.gamma, opts.cache_rows);
  SvcTrainResult result;
  long long budget = opts.max_pair_updates;
  long long used = 0;
  const SmoRunResult run = smo_run(s, kernel, opts.kkt_tol, budget, used,
                                   opts.track_dual, &result.report.dual_trace);
  fill_report(result.report, s, run.converged, used, run.gap);

  std::vector<int> sv_rows;
  for (int i = 0; i < l; ++i)
    if (s.a[static_cast<size_t>(i)] > 0.0) sv_rows.push_back(i);
  result.model.params = params;
  result.model.support_vectors = x.select_rows(sv_rows);
  for (int i : sv_rows)
    result.model.dual_coeffs.push_back(s.a[static_cast<size_t>(i)] * y[static_cast<size_t>(i)]);
  result.model.bias = -compute_rho(s).rho;
  return result;
}

SvcPrediction predict_svc(const SvcModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.support_vectors.cols)
    throw ValidationError("predict_svc: dimension mismatch");
  std::vector<double> terms(model.dual_coeffs.size());
  for (size_t i = 0; i < model.dual_coeffs.size(); ++i)
    terms[i] = model.dual_coeffs[i] *
               rbf_kernel(model.support_vectors.row_span(static_cast<int>(i)), x,
                          model.params.gamma);
  SvcPrediction pred;
  pred.decision_value = stable_sum(terms) + model.bias;
  pred.label = pred.decision_value < 0.0 ? -1 : 1;
  return pred;
}

namespace {

/// Matches each support vector back to an unused training row by exact
/// element equality (rows among exact duplicates are interchangeable).
std::vector<int> match_support_rows(const Matrix& svs, const Matrix& x) {
  std::vector<int> rows(static_cast<size_t>(svs.rows), -1);
  std::vector<bool> used(static_cast<size_t>(x.rows), false);
  for (int s = 0; s < svs.rows; ++s) {
    for (int r = 0; r < x.rows; ++r) {
      if (used[static_cast<size_t>(r)]) continue;
      if (std::equal(svs.row(s), svs.row(s) + svs.cols, x.row(r))) {
        rows[static_cast<size_t>(s)] = r;
        used[static_cast<size_t>(r)] = true;
        break;
      }
    }
    if (rows[static_cast<size_t>(s)] < 0)
      throw ValidationError("dual diagnostics: support vector not found in training data");
  }
  return rows;
}

DualDiagnostics diagnose(SmoState& s, const Matrix& x) {
  // Recompute the gradient densely: grad_t = sign_t f0(x_base(t)) + p_t with
  // f0 the bias-free expansion of the current coefficients.
  (void)x;
  int i, j;
  DualDiagnostics diag;
  diag.max_kkt_violation = std::max(select_pair(s, i, j), 0.0);
  diag.dual_objective = dual_ascent_value(s);
  return diag;
}

}  // namespace

DualDiagnostics svr_dual_diagnostics(const SvrModel& model, const Matrix& x,
                                     const std::vector<double>& y) {
  if (static_cast<int>(y.size()) != x.rows)
    throw ValidationError("svr_dual_diagnostics: target length mismatch");
  const int l = x.rows;
  std::vector<double> beta(static_cast<size_t>(l), 0.0);
  const auto rows = match_support_rows(model.support_vectors, x);
  for (size_t s = 0; s < rows.size(); ++s) beta[static_cast<size_t>(rows[s])] = model.dual_coeffs[s];

  SmoState st;
  st.n = 2 * l;
  st.base = l;
  st.c = model.params.c;
  st.p.resize(static_cast<size_t>(st.n));
  st.sign.resize(static_cast<size_t>(st.n));
  st.a.resize(static_cast<size_t>(st.n));
  for (int i = 0; i < l; ++i) {
    st.p[static_cast<size_t>(i)] = model.params.epsilon - y[static_cast<size_t>(i)];
    st.sign[static_cast<size_t>(i)] = 1;
    st.p[static_cast<size_t>(i + l)] = model.params.epsilon + y[static_cast<size_t>(i)];
    st.sign[static_cast<size_t>(i + l)] = -1;
    st.a[static_cast<size_t>(i)] = std::max(beta[static_cast<size_t>(i)], 0.0);
    st.a[static_cast<size_t>(i + l)] = std::max(-beta[static_cast<size_t>(i)], 0.0);
  }
  st.grad.resize(static_cast<size_t>(st.n));
  for (int t = 0; t < st.n; ++t) {
    double f0 = 0.0;
    for (int u = 0; u < l; ++u)
      f0 += beta[static_cast<size_t>(u)] *
            rbf_kernel(x.row_span(t % l), x.row_span(u), model.params.gamma);
    st.grad[static_cast<size_t>(t)] =
        st.sign[static_cast<size_t>(t)] * f0 + st.p[static_cast<size_t>(t)];
  }
  return diagnose(st, x);
}

DualDiagnostics svc_dual_diagnostics(const SvcModel& model, const Matrix& x,
                                     const std::vector<int>& y) {
  if (static_cast<int>(y.size()) != x.rows)
    throw ValidationError("svc_dual_diagnostics: label length mismatch");
  const int l = x.rows;
  std::vector<double> coeff(static_cast<size_t>(l), 0.0);
  const auto rows = match_support_rows(model.support_vectors, x);
  for (size_t s = 0; s < rows.size(); ++s) coeff[static_cast<size_t>(rows[s])] = model.dual_coeffs[s];

  SmoState st;
  st.n = l;
  st.base = l;
  st.c = model.params.c;
  st.p.assign(static_cast<size_t>(l), -1.0);
  st.sign.resize(static_cast<size_t>(l));
  st.a.resize(static_cast<size_t>(l));
  for (int i = 0; i < l; ++i) {
    st.sign[static_cast<size_t>(i)] = static_cast<int8_t>(y[static_cast<size_t>(i)]);
    st.a[static_cast<size_t>(i)] = coeff[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
    if (st.a[static_cast<size_t>(i)] < 0.0)
      throw ValidationError("svc_dual_diagnostics: coefficient sign does not match label");
  }
  st.grad.resize(static_cast<size_t>(l));
  for (int t = 0; t < l; ++t) {
    double f0 = 0.0;
    for (int u = 0; u < l; ++u)
      f0 += coeff[static_cast<size_t>(u)] *
            rbf_kernel(x.row_span(t), x.row_span(u), model.params.gamma);
    st.grad[static_cast<size_t>(t)] =
        st.sign[static_cast<size_t>(t)] * f0 + st.p[static_cast<size_t>(t)];
  }
  return diagnose(st, x);
}

}  // namespace affect
