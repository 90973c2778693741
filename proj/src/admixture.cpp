#include "affect/admixture.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "affect/csv.hpp"

namespace affect {

void EmotionProfileMatrix::validate() const {
  for (int j = 0; j < kNumEmotions; ++j) {
    std::vector<double> col(static_cast<size_t>(profiles.rows));
    for (int r = 0; r < profiles.rows; ++r) {
      const double v = profiles.at(r, j);
      if (!(v >= 0.0)) throw ValidationError("profile column has a negative entry");
      col[static_cast<size_t>(r)] = v;
    }
    if (std::fabs(stable_sum(col) - 1.0) > 1e-8)
      throw ValidationError("profile column does not sum to 1");
  }
}

double AdmixtureProblem::objective(const Matrix& p) const {
  // const_term - 2 tr(P^T B) + sum_jk G_jk <p_j, p_k>
  std::vector<double> terms;
  terms.reserve(static_cast<size_t>(kNumEmotions) * (kNumEmotions + 1));
  for (int j = 0; j < kNumEmotions; ++j) {
    double dot = 0.0;
    for (int r = 0; r < d; ++r) dot += cross.at(r, j) * p.at(r, j);
    terms.push_back(-2.0 * dot);
  }
  for (int j = 0; j < kNumEmotions; ++j)
    for (int k = 0; k < kNumEmotions; ++k) {
      double dot = 0.0;
      for (int r = 0; r < d; ++r) dot += p.at(r, j) * p.at(r, k);
      terms.push_back(gram[static_cast<size_t>(j)][static_cast<size_t>(k)] * dot);
    }
  terms.push_back(const_term);
  return stable_sum(terms);
}

void AdmixtureProblem::gradient(const Matrix& p, Matrix& out) const {
  for (int r = 0; r < d; ++r)
    for (int j = 0; j < kNumEmotions; ++j) {
      double g = -cross.at(r, j);
      for (int k = 0; k < kNumEmotions; ++k)
        g += gram[static_cast<size_t>(j)][static_cast<size_t>(k)] * p.at(r, k);
      out.at(r, j) = g;
    }
}

double AdmixtureProblem::gram_spectral_norm() const {
  std::array<double, kNumEmotions> v{};
  v.fill(1.0 / std::sqrt(static_cast<double>(kNumEmotions)));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    std::array<double, kNumEmotions> w{};
    for (int j = 0; j < kNumEmotions; ++j)
      for (int k = 0; k < kNumEmotions; ++k)
        w[static_cast<size_t>(j)] +=
            gram[static_cast<size_t>(j)][static_cast<size_t>(k)] * v[static_cast<size_t>(k)];
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= 0.0) return 0.0;
    for (int j = 0; j < kNumEmotions; ++j) v[static_cast<size_t>(j)] = w[static_cast<size_t>(j)] / norm;
    lambda = norm;
  }
  return lambda;
}

void project_to_simplex(std::span<double> v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0, theta = 0.0;
  for (int k = 0; k < n; ++k) {
    cumsum += sorted[static_cast<size_t>(k)];
    const double t = (cumsum - 1.0) / (k + 1);
    if (sorted[static_cast<size_t>(k)] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) throw ValidationError("project_simplex: empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError("project_simplex: non-finite input");
  std::vector<double> out(v.begin(), v.end());
  project_to_simplex(out);
  return out;
}

AdmixtureProblem build_problem(const Dataset& ds, FamilyTag family, const ConceptFilter& filter,
                               int threads) {
  if (ds.size() == 0) throw ValidationError("build_problem: empty dataset");
  if (ds.label_kind != LabelKind::Distribution && ds.label_kind != LabelKind::DistributionVa)
    throw ValidationError("build_problem: dataset needs distribution labels");
  const FamilyData* fam = ds.family(family);
  if (fam == nullptr)
    throw ValidationError(std::string("build_problem: family not in dataset: ") + family_name(family));

  const int d = static_cast<int>(filter.kept_indices.size());
  const int n = ds.size();
  AdmixtureProblem prob;
  prob.d = d;
  prob.n = n;
  prob.cross = Matrix(d, kNumEmotions);

  struct Partial {
    std::array<std::array<double, kNumEmotions>, kNumEmotions> gram{};
    Matrix cross;
    double const_term = 0.0;
  };
  constexpr int kChunk = 256;
  const int n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Partial> partials(static_cast<size_t>(n_chunks));

  auto run_chunk = [&](int chunk) {
    Partial& part = partials[static_cast<size_t>(chunk)];
    part.cross = Matrix(d, kNumEmotions);
    const int lo = chunk * kChunk;
    const int hi = std::min(n, lo + kChunk);
    for (int i = lo; i < hi; ++i) {
      const auto h = apply_concept_filter(filter, fam->values.row_span(i));
      const EmotionDistribution& e = *ds.labels[static_cast<size_t>(i)].distribution;
      for (int j = 0; j < kNumEmotions; ++j) {
        for (int k = 0; k < kNumEmotions; ++k)
          part.gram[static_cast<size_t>(j)][static_cast<size_t>(k)] += e[j] * e[k];
        const double ej = e[j];
        for (int r = 0; r < d; ++r) part.cross.at(r, j) += ej * h[static_cast<size_t>(r)];
      }
      for (double x : h) part.const_term += x * x;
    }
  };

  const int workers = std::max(1, std::min(threads, n_chunks));
  if (workers == 1) {
    for (int c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const int c = next.fetch_add(1);
          if (c >= n_chunks) return;
          run_chunk(c);
        }
      });
    for (auto& t : pool) t.join();
  }

  // Combine partials in chunk order: the reduction is bit-identical no
  // matter how many workers ran.
  for (const auto& part : partials) {
    for (int j = 0; j < kNumEmotions; ++j)
      for (int k = 0; k < kNumEmotions; ++k)
        prob.gram[static_cast<size_t>(j)][static_cast<size_t>(k)] +=
            part.gram[static_cast<size_t>(j)][static_cast<size_t>(k)];
    for (size_t idx = 0; idx < prob.cross.data.size(); ++idx)
      prob.cross.data[idx] += part.cross.data[idx];
    prob.const_term += part.const_term;
  }
  return prob;
}

double kkt_block_violation(const AdmixtureProblem& prob, const Matrix& p) {
  Matrix grad(prob.d, kNumEmotions);
  prob.gradient(p, grad);
  double worst = 0.0;
  for (int j = 0; j < kNumEmotions; ++j) {
    double mean = 0.0;
    int support = 0;
    for (int r = 0; r < prob.d; ++r)
      if (p.at(r, j) > 0.0) {
        mean += grad.at(r, j);
        ++support;
      }
    if (support == 0) continue;
    mean /= support;
    for (int r = 0; r < prob.d; ++r) {
      const double g = grad.at(r, j);
      if (p.at(r, j) > 0.0)
        worst = std::max(worst, std::fabs(g - mean));
      else
        worst = std::max(worst, std::max(0.0, mean - g));
    }
  }
  return worst;
}

namespace {

double constraint_violation_of(const Matrix& p) {
  double worst = 0.0;
  for (int j = 0; j < kNumEmotions; ++j) {
    std::vector<double> col(static_cast<size_t>(p.rows));
    for (int r = 0; r < p.rows; ++r) {
      col[static_cast<size_t>(r)] = p.at(r, j);
      if (p.at(r, j) < 0.0) worst = std::max(worst, -p.at(r, j));
    }
    worst = std::max(worst, std::fabs(stable_sum(col) - 1.0));
  }
  return worst;
}

void project_columns(Matrix& p) {
  std::vector<double> col(static_cast<size_t>(p.rows));
  for (int j = 0; j < kNumEmotions; ++j) {
    for (int r = 0; r < p.rows; ++r) col[static_cast<size_t>(r)] = p.at(r, j);
    project_to_simplex(col);
    for (int r = 0; r < p.rows; ++r) p.at(r, j) = col[static_cast<size_t>(r)];
  }
}

}  // namespace

AdmixtureSolution solve_admixture(const AdmixtureProblem& prob, const SolveOptions& opts) {
  if (!(opts.tol > 0.0)) throw ValidationError("solve_admixture: tol must be positive");
  if (opts.max_iter < 1) throw ValidationError("solve_admixture: max_iter must be >= 1");

  const int d = prob.d;
  const double lipschitz = std::max(prob.gram_spectral_norm(), 1e-300);
  const double step = 1.0 / lipschitz;

  Matrix p(d, kNumEmotions);
  for (auto& x : p.data) x = 1.0 / d;  // uniform columns: feasible, symmetric
  Matrix extrapolated = p;
  Matrix grad(d, kNumEmotions);
  Matrix candidate(d, kNumEmotions);

  double t_momentum = 1.0;
  double obj = prob.objective(p);

  AdmixtureSolution sol;
  if (opts.track_objective) sol.report.objective_trace.push_back(obj);

  int it = 0;
  int stalled = 0;
  for (; it < opts.max_iter; ++it) {
    if (kkt_block_violation(prob, p) <= opts.tol) {
      sol.report.converged = true;
      break;
    }

    prob.gradient(extrapolated, grad);
    for (size_t idx = 0; idx < candidate.data.size(); ++idx)
      candidate.data[idx] = extrapolated.data[idx] - step * grad.data[idx];
    project_columns(candidate);
    double cand_obj = prob.objective(candidate);

    if (cand_obj > obj) {
      // Momentum overshot: fall back to the plain projected step from the
      // current iterate (non-increasing at this step size) and restart the
      // momentum sequence.
      prob.gradient(p, grad);
      for (size_t idx = 0; idx < candidate.data.size(); ++idx)
        candidate.data[idx] = p.data[idx] - step * grad.data[idx];
      project_columns(candidate);
      cand_obj = prob.objective(candidate);
      t_momentum = 1.0;
      if (cand_obj > obj) {  // flat to numerical precision
        extrapolated = p;
        if (opts.track_objective) sol.report.objective_trace.push_back(obj);
        if (++stalled >= 2) break;
        continue;
      }
    }
    stalled = 0;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    const double beta = (t_momentum - 1.0) / t_next;
    for (size_t idx = 0; idx < extrapolated.data.size(); ++idx)
      extrapolated.data[idx] =
          candidate.data[idx] + beta * (candidate.data[idx] - p.data[idx]);
    t_momentum = t_next;
    std::swap(p, candidate);
    obj = cand_obj;
    if (opts.track_objective) sol.report.objective_trace.push_back(obj);
  }

  sol.report.iterations = it;
  sol.report.final_objective = obj;
  sol.report.constraint_violation = constraint_violation_of(p);
  sol.profile.profiles = std::move(p);
  return sol;
}

TopConcepts top_concepts(const EmotionProfileMatrix& p, int k) {
  const int d = p.dim();
  if (k < 1 || k > d) throw ValidationError("top_concepts: k must be in [1, d]");
  TopConcepts top;
  std::vector<bool> in_union(static_cast<size_t>(d), false);
  for (int j = 0; j < kNumEmotions; ++j) {
    std::vector<int> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return p.profiles.at(a, j) > p.profiles.at(b, j);  // ties keep lower index
    });
    for (int r = 0; r < k; ++r) {
      const int idx = order[static_cast<size_t>(r)];
      top.per_class[static_cast<size_t>(j)].emplace_back(idx, p.profiles.at(idx, j));
      in_union[static_cast<size_t>(idx)] = true;
    }
  }
  for (int i = 0; i < d; ++i)
    if (in_union[static_cast<size_t>(i)]) top.union_indices.push_back(i);
  return top;
}

void export_heatmap(const EmotionProfileMatrix& p, std::span<const int> concept_subset,
                    const std::filesystem::path& base_path) {
  for (int idx : concept_subset)
    if (idx < 0 || idx >= p.dim()) throw ValidationError("export_heatmap: concept index out of range");

  auto concept_label = [&](int idx) {
    return static_cast<size_t>(idx) < p.concept_names.size()
               ? p.concept_names[static_cast<size_t>(idx)]
               : "c" + std::to_string(idx);
  };

  // CSV: one row per concept, one column per class.
  std::vector<std::string> header = {"concept"};
  for (const char* n : kEmotionNames) header.emplace_back(n);
  std::vector<std::vector<std::string>> rows;
  for (int idx : concept_subset) {
    std::vector<std::string> row = {concept_label(idx)};
    for (int j = 0; j < kNumEmotions; ++j) row.push_back(fmt_double(p.profiles.at(idx, j)));
    rows.push_back(std::move(row));
  }
  auto csv_path = base_path;
  csv_path += ".csv";
  write_csv(csv_path, header, rows);

  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (int idx : concept_subset)
    for (int j = 0; j < kNumEmotions; ++j) {
      const double v = p.profiles.at(idx, j);
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }

  constexpr int kCellW = 56, kCellH = 22, kLabelW = 170, kHeaderH = 26;
  const int width = kLabelW + kNumEmotions * kCellW + 10;
  const int height = kHeaderH + static_cast<int>(concept_subset.size()) * kCellH + 10;

  auto svg_path = base_path;
  svg_path += ".svg";
  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + svg_path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int j = 0; j < kNumEmotions; ++j)
    out << "  <text x=\"" << kLabelW + j * kCellW + kCellW / 2 << "\" y=\"" << kHeaderH - 8
        << "\" text-anchor=\"middle\">" << kEmotionNames[static_cast<size_t>(j)] << "</text>\n";
  for (size_t r = 0; r < concept_subset.size(); ++r) {
    const int idx = concept_subset[r];
    const int y = kHeaderH + static_cast<int>(r) * kCellH;
    out << "  <text x=\"" << kLabelW - 6 << "\" y=\"" << y + kCellH - 7
        << "\" text-anchor=\"end\">" << concept_label(idx) << "</text>\n";
    for (int j = 0; j < kNumEmotions; ++j) {
      const double v = p.profiles.at(idx, j);
      const double t = hi > lo ? (v - lo) / (hi - lo) : 1.0;  // constant matrix: all darkest
      const int shade = static_cast<int>(std::lround(245.0 - 220.0 * t));
      out << "  <rect x=\"" << kLabelW + j * kCellW << "\" y=\"" << y << "\" width=\"" << kCellW
          << "\" height=\"" << kCellH << "\" fill=\"rgb(" << shade << ',' << shade << ',' << shade
          << ")\" stroke=\"white\"><title>" << concept_label(idx) << " / "
          << kEmotionNames[static_cast<size_t>(j)] << ": " << fmt_double(v) << "</title></rect>\n";
    }
  }
  out << "</svg>\n";
  if (!out) throw ValidationError("write failed: " + svg_path.string());
}

}  // namespace affect
