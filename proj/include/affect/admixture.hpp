#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "affect/dataset.hpp"
#include "affect/types.hpp"

namespace affect {

/// One concept distribution per emotion class: column j is the profile of
/// class j, nonnegative and summing to one.
struct EmotionProfileMatrix {
  Matrix profiles;  // d x 7
  std::vector<std::string> concept_names;

  int dim() const { return profiles.rows; }
  void validate() const;  // columns on the simplex within 1e-8
};

/// Sufficient statistics of the least-squares fit of per-image concept
/// vectors h_i to mixtures of class profiles weighted by the emotion
/// distribution e_i. The full design matrix never materializes: its Gram
/// matrix factors into gram (7x7) acting identically on every concept row,
/// so gradients cost O(7d).
struct AdmixtureProblem {
  std::array<std::array<double, kNumEmotions>, kNumEmotions> gram{};  // sum_i e_i e_i^T
  Matrix cross;       // d x 7, column j = sum_i e_ij h_i
  double const_term = 0.0;  // sum_i ||h_i||^2
  int d = 0;
  int n = 0;

  /// sum_i || h_i - sum_j e_ij p_j ||^2 for the given profile matrix.
  double objective(const Matrix& p) const;
  /// grad[:,j] = sum_k gram[j][k] p_k - cross[:,j] (half the true gradient;
  /// the 1/lambda_max step below absorbs the factor 2).
  void gradient(const Matrix& p, Matrix& out) const;
  /// Largest eigenvalue of gram (power iteration).
  double gram_spectral_norm() const;
};

struct SolverReport {
  int iterations = 0;
  double final_objective = 0.0;
  double constraint_violation = 0.0;  // max column |sum-1| or negative entry
  bool converged = false;
  std::vector<double> objective_trace;  // filled when tracking is on
};

struct SolveOptions {
  double tol = 1e-8;        // first-order (KKT) stationarity target
  int max_iter = 50000;
  bool track_objective = false;
};

/// Euclidean projection onto { w >= 0, sum w = 1 } (sort-based threshold).
void project_to_simplex(std::span<double> v);
std::vector<double> project_simplex(std::span<const double> v);

/// Accumulates the problem statistics for one HLC family, applying the
/// concept filter to every record. Chunked fixed-order reduction keeps the
/// result identical for any thread count.
AdmixtureProblem build_problem(const Dataset& ds, FamilyTag family, const ConceptFilter& filter,
                               int threads = 1);

struct AdmixtureSolution {
  EmotionProfileMatrix profile;
  SolverReport report;
};

/// Accelerated projected gradient over the product of seven simplices,
/// monotone variant: an extrapolated step is kept only when it lowers the
/// objective, otherwise the plain projected step from the previous iterate
/// is taken. Every iterate is feasible.
AdmixtureSolution solve_admixture(const AdmixtureProblem& prob, const SolveOptions& opts = {});

/// Max over columns of the first-order violation: on-support gradient
/// spread around its mean, and how far below that mean any off-support
/// gradient entry falls.
double kkt_block_violation(const AdmixtureProblem& prob, const Matrix& p);

struct TopConcepts {
  std::array<std::vector<std::pair<int, double>>, kNumEmotions> per_class;
  std::vector<int> union_indices;  // sorted ascending
};

/// k largest-weight concepts per class (ties to the lower index) and the
/// union across classes.
TopConcepts top_concepts(const EmotionProfileMatrix& p, int k);

/// Writes <base>.csv (concept rows x class columns) and <base>.svg (heat
/// map, darker cells for larger values, linear over [min, max]).
void export_heatmap(const EmotionProfileMatrix& p, std::span<const int> concept_subset,
                    const std::filesystem::path& base_path);

}  // namespace affect
