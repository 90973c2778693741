#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "affect/hybrid.hpp"
#include "affect/model_selection.hpp"
#include "affect/serialization.hpp"
#include "affect/types.hpp"

namespace affect {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNonConvergence = 3;

/// Everything that shapes a run's numbers. Serialized next to every output
/// for provenance; the worker count and output directory are runtime-only
/// and excluded so reruns with different parallelism or target directories
/// stay byte-identical.
struct RunConfig {
  uint64_t seed = 0;
  int threads = 1;                       // not serialized
  std::filesystem::path out_dir = "out"; // not serialized
  double test_fraction = 0.2;
  ParamGrid grid = ParamGrid::defaults();
  double epsilon = 0.01;
  double detect_threshold = 0.01;
  double frequency_threshold = 0.10;
  int cv_folds = 5;
  double kld_smoothing = 1e-10;
  double kld_log_base = 0.0;  // 0 = natural log
  TprStrategy tpr_strategy = TprStrategy::CvMean;
  double admixture_tol = 1e-8;
  int admixture_max_iter = 50000;
  double svm_kkt_tol = 1e-3;
  long long svm_max_pair_updates = 10'000'000;

  void validate() const;
  BuildConfig build_config() const;
};

ordered_json run_config_to_json(const RunConfig& cfg);
/// Overlays the JSON fields present onto the defaults.
RunConfig run_config_from_json(const ordered_json& j);

struct IngestArgs {
  std::filesystem::path manifest;
};

struct AdmixtureArgs {
  std::filesystem::path manifest;
  std::string family;  // empty: the dataset's only HLC family
  int topk = 10;
  std::filesystem::path truth;  // optional ground-truth sidecar to compare against
};

struct TrainArgs {
  std::filesystem::path manifest;
  std::string task;  // distribution | va | artphoto
  bool report = false;
};

struct PredictArgs {
  std::filesystem::path bundle;
  std::filesystem::path manifest;
};

struct EvaluateArgs {
  std::filesystem::path predictions;
  std::filesystem::path manifest;
  std::filesystem::path ids;  // optional id filter file (one id per line)
  bool reference = false;     // print published Emotion6 reference rows
};

struct SynthArgs {
  std::string kind;  // admixture | hybrid
  int d = 50;
  int n = 2000;
  double noise_std = 0.001;
  int records = 700;
};

int cmd_ingest(const IngestArgs& args, const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_admixture(const AdmixtureArgs& args, const RunConfig& cfg, std::ostream& out,
                  std::ostream& err);
int cmd_train(const TrainArgs& args, const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictArgs& args, const RunConfig& cfg, std::ostream& out,
                std::ostream& err);
int cmd_evaluate(const EvaluateArgs& args, const RunConfig& cfg, std::ostream& out,
                 std::ostream& err);
int cmd_synth(const SynthArgs& args, const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Published Emotion6 reference results printed by `evaluate --reference`.
struct ReferenceRow {
  const char* features;
  double acc_percent;  // < 0: not reported
  double kld;
  double bc;
};

struct ReferenceVaRow {
  const char* features;
  double valence_aad;
  double arousal_aad;
};

const std::vector<ReferenceRow>& emotion6_reference_rows();
const std::vector<ReferenceVaRow>& emotion6_va_reference_rows();

}  // namespace affect
