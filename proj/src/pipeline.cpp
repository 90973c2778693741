#include "affect/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "affect/admixture.hpp"
#include "affect/csv.hpp"
#include "affect/dataset.hpp"
#include "affect/metrics.hpp"

namespace affect {

void RunConfig::validate() const {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    throw ValidationError("config: test_fraction must be in (0,1)");
  grid.validate();
  if (epsilon < 0.0) throw ValidationError("config: epsilon must be >= 0");
  if (detect_threshold < 0.0) throw ValidationError("config: detect_threshold must be >= 0");
  if (!(frequency_threshold > 0.0) || frequency_threshold > 1.0)
    throw ValidationError("config: frequency_threshold must be in (0,1]");
  if (cv_folds < 2) throw ValidationError("config: cv_folds must be >= 2");
  if (!(kld_smoothing > 0.0)) throw ValidationError("config: kld_smoothing must be > 0");
  if (kld_log_base < 0.0 || (kld_log_base > 0.0 && kld_log_base <= 1.0))
    throw ValidationError("config: kld_log_base must be 0 (natural) or > 1");
  if (!(admixture_tol > 0.0)) throw ValidationError("config: admixture_tol must be > 0");
  if (admixture_max_iter < 1) throw ValidationError("config: admixture_max_iter must be >= 1");
  if (!(svm_kkt_tol > 0.0)) throw ValidationError("config: svm_kkt_tol must be > 0");
  if (svm_max_pair_updates < 1) throw ValidationError("config: svm_max_pair_updates must be >= 1");
  if (threads < 1) throw ValidationError("config: threads must be >= 1");
}

BuildConfig RunConfig::build_config() const {
  BuildConfig b;
  b.grid = grid;
  b.epsilon = epsilon;
  b.seed = seed;
  b.detect_threshold = detect_threshold;
  b.frequency_threshold = frequency_threshold;
  b.cv_folds = cv_folds;
  b.threads = threads;
  b.train.kkt_tol = svm_kkt_tol;
  b.train.max_pair_updates = svm_max_pair_updates;
  return b;
}

ordered_json run_config_to_json(const RunConfig& cfg) {
  return ordered_json{{"seed", cfg.seed},
                      {"test_fraction", cfg.test_fraction},
                      {"grid", {{"c_values", cfg.grid.c_values}, {"gamma_values", cfg.grid.gamma_values}}},
                      {"epsilon", cfg.epsilon},
                      {"detect_threshold", cfg.detect_threshold},
                      {"frequency_threshold", cfg.frequency_threshold},
                      {"cv_folds", cfg.cv_folds},
                      {"kld_smoothing", cfg.kld_smoothing},
                      {"kld_log_base", cfg.kld_log_base},
                      {"tpr_strategy", tpr_strategy_name(cfg.tpr_strategy)},
                      {"admixture_tol", cfg.admixture_tol},
                      {"admixture_max_iter", cfg.admixture_max_iter},
                      {"svm_kkt_tol", cfg.svm_kkt_tol},
                      {"svm_max_pair_updates", cfg.svm_max_pair_updates}};
}

RunConfig run_config_from_json(const ordered_json& j) {
  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
  if (j.contains("grid")) {
    cfg.grid.c_values = j.at("grid").value("c_values", cfg.grid.c_values);
    cfg.grid.gamma_values = j.at("grid").value("gamma_values", cfg.grid.gamma_values);
  }
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.detect_threshold = j.value("detect_threshold", cfg.detect_threshold);
  cfg.frequency_threshold = j.value("frequency_threshold", cfg.frequency_threshold);
  cfg.cv_folds = j.value("cv_folds", cfg.cv_folds);
  cfg.kld_smoothing = j.value("kld_smoothing", cfg.kld_smoothing);
  cfg.kld_log_base = j.value("kld_log_base", cfg.kld_log_base);
  if (j.contains("tpr_strategy"))
    cfg.tpr_strategy = tpr_strategy_from_name(j.at("tpr_strategy").get<std::string>());
  cfg.admixture_tol = j.value("admixture_tol", cfg.admixture_tol);
  cfg.admixture_max_iter = j.value("admixture_max_iter", cfg.admixture_max_iter);
  cfg.svm_kkt_tol = j.value("svm_kkt_tol", cfg.svm_kkt_tol);
  cfg.svm_max_pair_updates = j.value("svm_max_pair_updates", cfg.svm_max_pair_updates);
  return cfg;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

void prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  write_json_file(cfg.out_dir / "runconfig.json", run_config_to_json(cfg));
}

std::vector<std::string> subset_header() {
  std::vector<std::string> h;
  for (const auto& s : enumerate_subsets()) h.push_back(s.label());
  return h;
}

template <size_t N>
void write_selection_table(const std::filesystem::path& path,
                           const std::vector<std::string>& row_names,
                           const std::vector<std::array<double, N>>& values,
                           const std::vector<std::string>& selected) {
  std::vector<std::string> header = {"target"};
  for (const auto& s : subset_header()) header.push_back(s);
  header.push_back("selected");
  std::vector<std::vector<std::string>> rows;
  for (size_t r = 0; r < row_names.size(); ++r) {
    std::vector<std::string> row = {row_names[r]};
    for (size_t s = 0; s < N; ++s) row.push_back(fmt_double(values[r][s]));
    row.push_back(selected[r]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_grid_report(const std::filesystem::path& path, const std::vector<CvCell>& cells,
                       const KernelParams& best, double best_score, bool svc) {
  std::vector<std::string> header = {"C", "gamma", "fold", svc ? "accuracy" : "mse"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& cell : cells) {
    for (size_t f = 0; f < cell.fold_scores.size(); ++f)
      rows.push_back({fmt_double(cell.c), fmt_double(cell.gamma), std::to_string(f),
                      fmt_double(cell.fold_scores[f])});
    rows.push_back({fmt_double(cell.c), fmt_double(cell.gamma), "mean", fmt_double(cell.mean_score)});
  }
  rows.push_back({fmt_double(best.c), fmt_double(best.gamma), "best", fmt_double(best_score)});
  write_csv(path, header, rows);
}

void save_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  for (const auto& id : ids) out << id << '\n';
}

LabelKind required_label_kind(const std::string& task, LabelKind have) {
  if (task == "distribution") {
    if (have == LabelKind::Distribution || have == LabelKind::DistributionVa) return have;
    throw ValidationError("task 'distribution' needs distribution labels, dataset has '" +
                          std::string(label_kind_name(have)) + "'");
  }
  if (task == "va") {
    if (have == LabelKind::Va || have == LabelKind::DistributionVa) return have;
    throw ValidationError("task 'va' needs valence/arousal labels, dataset has '" +
                          std::string(label_kind_name(have)) + "'");
  }
  if (task == "artphoto") {
    if (have == LabelKind::Hard) return have;
    throw ValidationError("task 'artphoto' needs hard class labels, dataset has '" +
                          std::string(label_kind_name(have)) + "'");
  }
  throw ValidationError("unknown task '" + task + "' (expected distribution, va or artphoto)");
}

}  // namespace

int cmd_ingest(const IngestArgs& args, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    const Dataset ds = load_dataset(args.manifest);
    out << "dataset: " << ds.name << " (" << ds.size() << " records)\n";
    out << "labels: " << label_kind_name(ds.label_kind) << "\n";
    for (const auto& fam : ds.families)
      out << "family " << family_name(fam.tag) << ": " << fam.dimension << " columns\n";
    if (ds.label_kind == LabelKind::Distribution || ds.label_kind == LabelKind::DistributionVa) {
      out << "class counts (dominant emotion):\n";
      const auto counts = class_counts(ds);
      for (int c = 0; c < kNumEmotions; ++c)
        out << "  " << kEmotionNames[static_cast<size_t>(c)] << " " << counts[static_cast<size_t>(c)]
            << "\n";
    } else if (ds.label_kind == LabelKind::Hard) {
      out << "class counts:\n";
      const auto counts = class_counts(ds);
      for (size_t c = 0; c < counts.size(); ++c)
        out << "  class " << c << " " << counts[c] << "\n";
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int cmd_admixture(const AdmixtureArgs& args, const RunConfig& cfg, std::ostream& out,
                  std::ostream& err) {
  try {
    cfg.validate();
    const Dataset ds = load_dataset(args.manifest);
    if (ds.label_kind != LabelKind::Distribution && ds.label_kind != LabelKind::DistributionVa)
      throw ValidationError("admixture needs distribution labels");

    FamilyTag family = FamilyTag::ImageNet;
    if (!args.family.empty()) {
      family = family_from_name(args.family);
    } else {
      std::vector<FamilyTag> hlc;
      for (const auto& fam : ds.families)
        if (fam.tag != FamilyTag::Llf) hlc.push_back(fam.tag);
      if (hlc.size() != 1)
        throw ValidationError("pass --family: the dataset has " + std::to_string(hlc.size()) +
                              " HLC families");
      family = hlc.front();
    }
    const FamilyData* fam = ds.family(family);
    if (fam == nullptr)
      throw ValidationError(std::string("family not in dataset: ") + family_name(family));
    if (family == FamilyTag::Llf) throw ValidationError("admixture runs on an HLC family, not LLF");

    const ConceptFilter filter =
        fit_concept_filter(fam->values, cfg.detect_threshold, cfg.frequency_threshold);
    const int d = static_cast<int>(filter.kept_indices.size());
    if (args.topk < 1 || args.topk > d)
      throw ValidationError("--topk must be between 1 and " + std::to_string(d) +
                            " (kept concepts)");

    const AdmixtureProblem prob = build_problem(ds, family, filter, cfg.threads);
    SolveOptions opts;
    opts.tol = cfg.admixture_tol;
    opts.max_iter = cfg.admixture_max_iter;
    AdmixtureSolution sol = solve_admixture(prob, opts);
    for (int idx : filter.kept_indices)
      sol.profile.concept_names.push_back(static_cast<size_t>(idx) < fam->column_names.size()
                                              ? fam->column_names[static_cast<size_t>(idx)]
                                              : "c" + std::to_string(idx));

    prepare_out_dir(cfg);
    const std::string tag = family_name(family);
    write_json_file(cfg.out_dir / ("profile_" + tag + ".json"), profile_to_json(sol.profile));

    const TopConcepts top = top_concepts(sol.profile, args.topk);
    export_heatmap(sol.profile, top.union_indices, cfg.out_dir / ("heatmap_" + tag));

    ordered_json report{{"family", tag},
                        {"records", prob.n},
                        {"kept_concepts", d},
                        {"iterations", sol.report.iterations},
                        {"final_objective", sol.report.final_objective},
                        {"constraint_violation", sol.report.constraint_violation},
                        {"kkt_violation", kkt_block_violation(prob, sol.profile.profiles)},
                        {"converged", sol.report.converged}};
    write_json_file(cfg.out_dir / "solver_report.json", report);

    out << "admixture: " << prob.n << " records, " << d << " kept concepts (family " << tag
        << ")\n";
    out << "solver: " << (sol.report.converged ? "converged" : "NOT converged") << " after "
        << sol.report.iterations << " iterations, objective " << fmt_double(sol.report.final_objective)
        << "\n";
    out << "top concepts (union of top-" << args.topk << " per class): " << top.union_indices.size()
        << "\n";

    if (!args.truth.empty()) {
      const EmotionProfileMatrix truth = profile_from_json(read_json_file(args.truth).at("profiles"));
      if (truth.dim() < d) throw ValidationError("truth profile has fewer concepts than kept set");
      out << "per-column L1 error vs ground truth:\n";
      for (int j = 0; j < kNumEmotions; ++j) {
        // Restrict the true column to the kept concepts and renormalize so
        // both sides live on the same simplex.
        std::vector<double> t;
        t.reserve(static_cast<size_t>(d));
        for (int idx : filter.kept_indices) t.push_back(truth.profiles.at(idx, j));
        const auto tn = normalize_hlc(t);
        std::vector<double> diffs(static_cast<size_t>(d));
        for (int r = 0; r < d; ++r)
          diffs[static_cast<size_t>(r)] = std::fabs(sol.profile.profiles.at(r, j) - tn[static_cast<size_t>(r)]);
        out << "  " << kEmotionNames[static_cast<size_t>(j)] << " " << fmt_double(stable_sum(diffs))
            << "\n";
      }
    }
    return sol.report.converged ? kExitOk : kExitNonConvergence;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int cmd_train(const TrainArgs& args, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    const Dataset ds = load_dataset(args.manifest);
    required_label_kind(args.task, ds.label_kind);

    SplitResult split = stratified_split(ds, cfg.test_fraction, cfg.seed);
    for (const auto& w : split.warnings) err << "warning: " << w << "\n";

    prepare_out_dir(cfg);
    save_id_list(cfg.out_dir / "train_ids.txt", split.train.ids);
    save_id_list(cfg.out_dir / "test_ids.txt", split.test.ids);

    const BuildConfig bc = cfg.build_config();
    const ordered_json config_json = run_config_to_json(cfg);
    const auto& subsets = enumerate_subsets();
    std::filesystem::path reports_dir = cfg.out_dir / "reports";
    if (args.report) std::filesystem::create_directories(reports_dir);

    if (args.task == "distribution") {
      const HybridBuild build = build_hybrid(split.train, bc);
      write_json_file(cfg.out_dir / "bundle.json", hybrid_bundle_to_json(build, config_json));
      std::vector<std::string> names, selected;
      std::vector<std::array<double, 7>> values;
      for (int c = 0; c < kNumEmotions; ++c) {
        names.emplace_back(kEmotionNames[static_cast<size_t>(c)]);
        values.push_back(build.mse_table[static_cast<size_t>(c)]);
        selected.push_back(build.ensemble.classes[static_cast<size_t>(c)].subset.label());
      }
      write_selection_table(cfg.out_dir / "selection_table.csv", names, values, selected);
      if (args.report)
        for (int c = 0; c < kNumEmotions; ++c)
          for (int s = 0; s < 7; ++s) {
            const auto& cell = build.cells[static_cast<size_t>(c)][static_cast<size_t>(s)];
            if (!cell.available) continue;
            write_grid_report(reports_dir / ("grid_" + names[static_cast<size_t>(c)] + "_" +
                                             subsets[static_cast<size_t>(s)].label() + ".csv"),
                              cell.cv_cells, cell.params, cell.cv_score, false);
          }
      out << "trained hybrid ensemble on " << split.train.size() << " records ("
          << split.test.size() << " held out)\n";
      for (int c = 0; c < kNumEmotions; ++c)
        out << "  " << kEmotionNames[static_cast<size_t>(c)] << ": "
            << build.ensemble.classes[static_cast<size_t>(c)].subset.label() << " (training MSE "
            << fmt_double(build.ensemble.classes[static_cast<size_t>(c)].training_mse) << ")\n";
    } else if (args.task == "va") {
      const VaBuild build = build_va(split.train, bc);
      write_json_file(cfg.out_dir / "bundle.json", va_bundle_to_json(build, config_json));
      const std::vector<std::array<double, 7>> va_values = {build.mse_table[0], build.mse_table[1]};
      write_selection_table(cfg.out_dir / "selection_table.csv",
                            std::vector<std::string>{"valence", "arousal"}, va_values,
                            {build.ensemble.valence.subset.label(),
                             build.ensemble.arousal.subset.label()});
      if (args.report) {
        const std::array<const SubsetSearchCell*, 2> rows = {build.cells[0].data(),
                                                             build.cells[1].data()};
        const std::array<const char*, 2> row_names = {"valence", "arousal"};
        for (int t = 0; t < 2; ++t)
          for (int s = 0; s < 7; ++s) {
            const auto& cell = rows[static_cast<size_t>(t)][s];
            if (!cell.available) continue;
            write_grid_report(reports_dir / (std::string("grid_") + row_names[static_cast<size_t>(t)] +
                                             "_" + subsets[static_cast<size_t>(s)].label() + ".csv"),
                              cell.cv_cells, cell.params, cell.cv_score, false);
          }
      }
      out << "trained VA ensemble on " << split.train.size() << " records\n";
      out << "  valence: " << build.ensemble.valence.subset.label() << "\n";
      out << "  arousal: " << build.ensemble.arousal.subset.label() << "\n";
    } else {  // artphoto
      const ArtphotoBuild build = build_artphoto(split.train, bc, cfg.tpr_strategy);
      write_json_file(cfg.out_dir / "bundle.json", artphoto_bundle_to_json(build, config_json));
      std::vector<std::string> names, selected;
      for (const auto& entry : build.ensemble.classes) {
        names.push_back("class" + std::to_string(entry.class_index));
        selected.push_back(entry.subset.label());
      }
      write_selection_table(cfg.out_dir / "selection_table.csv", names, build.score_table, selected);
      if (args.report)
        for (size_t ci = 0; ci < build.cells.size(); ++ci)
          for (int s = 0; s < 7; ++s) {
            const auto& cell = build.cells[ci][static_cast<size_t>(s)];
            if (!cell.available) continue;
            write_grid_report(reports_dir / ("grid_" + names[ci] + "_" +
                                             subsets[static_cast<size_t>(s)].label() + ".csv"),
                              cell.cv_cells, cell.params, cell.cv_score, true);
          }
      out << "trained 1-vs-all ensemble on " << split.train.size() << " records, "
          << build.ensemble.classes.size() << " classes\n";
      for (const auto& entry : build.ensemble.classes)
        out << "  class " << entry.class_index << ": " << entry.subset.label() << " (score "
            << fmt_double(entry.selection_score) << ")\n";
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int cmd_predict(const PredictArgs& args, const RunConfig& cfg, std::ostream& out,
                std::ostream& err) {
  try {
    cfg.validate();
    const ordered_json bundle = read_json_file(args.bundle);
    const Dataset ds = load_dataset(args.manifest);
    prepare_out_dir(cfg);
    const std::string kind = bundle.at("kind").get<std::string>();

    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    if (kind == "hybrid") {
      const HybridBuild build = hybrid_bundle_from_json(bundle);
      header = {"id"};
      for (const char* n : kEmotionNames) header.emplace_back(n);
      header.emplace_back("dominant");
      for (int i = 0; i < ds.size(); ++i) {
        const EmotionDistribution dist = predict_distribution(build.ensemble, ds.record(i));
        std::vector<std::string> row = {ds.ids[static_cast<size_t>(i)]};
        for (int c = 0; c < kNumEmotions; ++c) row.push_back(fmt_double(dist[c]));
        row.push_back(std::to_string(dominant_class(dist)));
        rows.push_back(std::move(row));
      }
    } else if (kind == "va") {
      const VaBuild build = va_bundle_from_json(bundle);
      header = {"id", "valence", "arousal"};
      for (int i = 0; i < ds.size(); ++i) {
        const VaPair va = predict_va(build.ensemble, ds.record(i));
        rows.push_back({ds.ids[static_cast<size_t>(i)], fmt_double(va.valence), fmt_double(va.arousal)});
      }
    } else if (kind == "artphoto") {
      const ArtphotoBuild build = artphoto_bundle_from_json(bundle);
      header = {"id", "class_index"};
      for (int i = 0; i < ds.size(); ++i)
        rows.push_back({ds.ids[static_cast<size_t>(i)],
                        std::to_string(predict_artphoto(build.ensemble, ds.record(i)))});
    } else {
      throw ValidationError("unknown bundle kind '" + kind + "'");
    }
    write_csv(cfg.out_dir / "predictions.csv", header, rows);
    out << "wrote " << rows.size() << " predictions (" << kind << ")\n";
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

namespace {

std::set<std::string> load_id_filter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.insert(line);
  }
  return ids;
}

void print_reference_tables(std::ostream& out, const EvaluationReport* dist_report,
                            const std::optional<double>& valence_aad,
                            const std::optional<double>& arousal_aad) {
  out << "published Emotion6 reference results (distribution prediction):\n";
  out << "  features                      acc%    KLD     BC\n";
  for (const auto& row : emotion6_reference_rows()) {
    char buf[128];
    if (row.acc_percent >= 0.0)
      std::snprintf(buf, sizeof(buf), "  %-28s  %-6.2f  %-6.3f  %-6.3f", row.features,
                    row.acc_percent, row.kld, row.bc);
    else
      std::snprintf(buf, sizeof(buf), "  %-28s  --      %-6.3f  %-6.3f", row.features, row.kld,
                    row.bc);
    out << buf << "\n";
  }
  if (dist_report != nullptr) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-28s  %-6.2f  %-6.3f  %-6.3f", "measured",
                  dist_report->accuracy * 100.0, dist_report->mean_kld, dist_report->mean_bc);
    out << buf << "\n";
  }
  out << "published Emotion6 reference results (VA prediction):\n";
  out << "  features                      valence AAD  arousal AAD\n";
  for (const auto& row : emotion6_va_reference_rows()) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-28s  %-11.4f  %-11.4f", row.features, row.valence_aad,
                  row.arousal_aad);
    out << buf << "\n";
  }
  if (valence_aad && arousal_aad) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-28s  %-11.4f  %-11.4f", "measured", *valence_aad,
                  *arousal_aad);
    out << buf << "\n";
  }
}

ordered_json reference_to_json() {
  ordered_json dist = ordered_json::array();
  for (const auto& row : emotion6_reference_rows()) {
    ordered_json r{{"features", row.features}, {"kld", row.kld}, {"bc", row.bc}};
    r["acc_percent"] = row.acc_percent >= 0.0 ? ordered_json(row.acc_percent) : ordered_json(nullptr);
    dist.push_back(std::move(r));
  }
  ordered_json va = ordered_json::array();
  for (const auto& row : emotion6_va_reference_rows())
    va.push_back(ordered_json{{"features", row.features},
                              {"valence_aad", row.valence_aad},
                              {"arousal_aad", row.arousal_aad}});
  return ordered_json{{"distribution", std::move(dist)}, {"va", std::move(va)}};
}

}  // namespace

int cmd_evaluate(const EvaluateArgs& args, const RunConfig& cfg, std::ostream& out,
                 std::ostream& err) {
  try {
    cfg.validate();
    const CsvTable preds = read_csv(args.predictions);
    const Dataset ds = load_dataset(args.manifest);
    if (ds.label_kind == LabelKind::None) throw ValidationError("evaluate: dataset has no labels");

    std::unordered_map<std::string, int> row_of;
    for (int i = 0; i < ds.size(); ++i) row_of[ds.ids[static_cast<size_t>(i)]] = i;
    std::set<std::string> filter;
    if (!args.ids.empty()) filter = load_id_filter(args.ids);

    std::vector<int> kept_rows;          // dataset row per evaluated prediction
    std::vector<size_t> kept_pred_rows;  // predictions row index
    for (size_t r = 0; r < preds.rows.size(); ++r) {
      const std::string& id = preds.rows[r][0];
      if (!filter.empty() && filter.find(id) == filter.end()) continue;
      auto it = row_of.find(id);
      if (it == row_of.end())
        throw ValidationError("prediction id '" + id + "' not present in the dataset");
      kept_rows.push_back(it->second);
      kept_pred_rows.push_back(r);
    }
    if (kept_rows.empty()) throw ValidationError("evaluate: no prediction rows to score");

    prepare_out_dir(cfg);
    ordered_json report_json;
    std::vector<std::vector<std::string>> record_rows;
    std::vector<std::string> record_header;

    const auto& header = preds.header;
    const bool is_distribution = header.size() == 2 + kNumEmotions && header[1] == "anger";
    const bool is_va = header == std::vector<std::string>{"id", "valence", "arousal"};
    const bool is_hard = header == std::vector<std::string>{"id", "class_index"};

    EvaluationReport report;
    bool have_dist_report = false;
    std::optional<double> valence_aad, arousal_aad;

    if (is_distribution) {
      if (ds.label_kind != LabelKind::Distribution && ds.label_kind != LabelKind::DistributionVa)
        throw ValidationError("distribution predictions need distribution labels");
      std::vector<std::string> ids;
      std::vector<EmotionDistribution> predicted, truth;
      for (size_t k = 0; k < kept_rows.size(); ++k) {
        const auto& cells = preds.rows[kept_pred_rows[k]];
        EmotionDistribution dist;
        for (int c = 0; c < kNumEmotions; ++c)
          dist[c] = parse_double_cell(cells[static_cast<size_t>(c) + 1], args.predictions,
                                      static_cast<int>(kept_pred_rows[k]) + 2, c + 2);
        dist.validate();
        ids.push_back(cells[0]);
        predicted.push_back(dist);
        truth.push_back(*ds.labels[static_cast<size_t>(kept_rows[k])].distribution);
      }
      report = evaluate_distributions(ids, predicted, truth, cfg.kld_smoothing, cfg.kld_log_base);
      have_dist_report = true;
      report_json = evaluation_report_to_json(report);
      record_header = {"id", "kld", "bc", "pred", "true"};
      for (const auto& r : report.records)
        record_rows.push_back({r.id, fmt_double(r.kld), fmt_double(r.bc),
                               std::to_string(r.predicted_class), std::to_string(r.true_class)});
      out << "accuracy: " << fixed(report.accuracy * 100.0, 2) << "%\n";
      out << "mean KLD: " << fmt_double(report.mean_kld) << "\n";
      out << "mean BC: " << fmt_double(report.mean_bc) << "\n";
    } else if (is_va) {
      if (ds.label_kind != LabelKind::Va && ds.label_kind != LabelKind::DistributionVa)
        throw ValidationError("va predictions need valence/arousal labels");
      std::vector<double> pv, tv, pa, ta;
      record_header = {"id", "pred_valence", "true_valence", "pred_arousal", "true_arousal"};
      for (size_t k = 0; k < kept_rows.size(); ++k) {
        const auto& cells = preds.rows[kept_pred_rows[k]];
        const int rowno = static_cast<int>(kept_pred_rows[k]) + 2;
        const double v = parse_double_cell(cells[1], args.predictions, rowno, 2);
        const double a = parse_double_cell(cells[2], args.predictions, rowno, 3);
        const VaPair& t = *ds.labels[static_cast<size_t>(kept_rows[k])].va;
        pv.push_back(v);
        pa.push_back(a);
        tv.push_back(t.valence);
        ta.push_back(t.arousal);
        record_rows.push_back({cells[0], fmt_double(v), fmt_double(t.valence), fmt_double(a),
                               fmt_double(t.arousal)});
      }
      valence_aad = aad(pv, tv);
      arousal_aad = aad(pa, ta);
      report_json = ordered_json{{"valence_aad", *valence_aad}, {"arousal_aad", *arousal_aad}};
      out << "valence AAD: " << fmt_double(*valence_aad) << "\n";
      out << "arousal AAD: " << fmt_double(*arousal_aad) << "\n";
    } else if (is_hard) {
      if (ds.label_kind != LabelKind::Hard) throw ValidationError("class predictions need hard labels");
      std::vector<int> pred, truth;
      record_header = {"id", "pred", "true"};
      for (size_t k = 0; k < kept_rows.size(); ++k) {
        const auto& cells = preds.rows[kept_pred_rows[k]];
        const int rowno = static_cast<int>(kept_pred_rows[k]) + 2;
        const double v = parse_double_cell(cells[1], args.predictions, rowno, 2);
        pred.push_back(static_cast<int>(v));
        truth.push_back(*ds.labels[static_cast<size_t>(kept_rows[k])].hard_class);
        record_rows.push_back({cells[0], cells[1], std::to_string(truth.back())});
      }
      const int num_classes = 1 + std::max(*std::max_element(pred.begin(), pred.end()),
                                           *std::max_element(truth.begin(), truth.end()));
      const auto tpr = per_class_tpr(pred, truth, num_classes);
      const double acc = accuracy(pred, truth);
      report_json["accuracy"] = acc;
      report_json["accuracy_percent"] = acc * 100.0;
      report_json["per_class_tpr"] = ordered_json::array();
      out << "accuracy: " << fixed(acc * 100.0, 2) << "%\n";
      for (size_t c = 0; c < tpr.size(); ++c) {
        report_json["per_class_tpr"].push_back(tpr[c] ? ordered_json(*tpr[c]) : ordered_json(nullptr));
        out << "class " << c << " TPR: " << (tpr[c] ? fmt_double(*tpr[c]) : std::string("undefined"))
            << "\n";
      }
    } else {
      throw ValidationError("unrecognized predictions header");
    }

    if (args.reference) {
      print_reference_tables(out, have_dist_report ? &report : nullptr, valence_aad, arousal_aad);
      report_json["reference"] = reference_to_json();
    }
    write_json_file(cfg.out_dir / "report.json", report_json);
    write_csv(cfg.out_dir / "per_record.csv", record_header, record_rows);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int cmd_synth(const SynthArgs& args, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    if (args.kind == "admixture") {
      if (args.d < kNumEmotions) throw ValidationError("synth admixture: --d must be >= 7");
      if (args.n < 1) throw ValidationError("synth admixture: --n must be >= 1");
      if (args.noise_std < 0.0) throw ValidationError("synth admixture: --noise must be >= 0");
      SynthAdmixture synth = synth_admixture(args.d, args.n, args.noise_std, cfg.seed);
      prepare_out_dir(cfg);
      const auto manifest = save_dataset(synth.dataset, cfg.out_dir);
      EmotionProfileMatrix truth;
      truth.profiles = synth.true_profiles;
      for (int c = 0; c < args.d; ++c) truth.concept_names.push_back("c" + std::to_string(c));
      write_json_file(cfg.out_dir / "truth.json",
                      ordered_json{{"kind", "admixture"},
                                   {"seed", cfg.seed},
                                   {"noise_std", args.noise_std},
                                   {"profiles", profile_to_json(truth)}});
      out << "wrote " << synth.dataset.size() << " records to " << manifest.string() << "\n";
    } else if (args.kind == "hybrid") {
      if (args.records < 1) throw ValidationError("synth hybrid: --records must be >= 1");
      SynthHybrid synth = synth_hybrid(args.records, cfg.seed);
      prepare_out_dir(cfg);
      const auto manifest = save_dataset(synth.dataset, cfg.out_dir);
      ordered_json class_family = ordered_json::array();
      ordered_json class_column = ordered_json::array();
      for (int c = 0; c < kNumEmotions; ++c) {
        class_family.push_back(family_name(synth.info.class_family[static_cast<size_t>(c)]));
        class_column.push_back(synth.info.class_column[static_cast<size_t>(c)]);
      }
      write_json_file(cfg.out_dir / "truth.json",
                      ordered_json{{"kind", "hybrid"},
                                   {"seed", cfg.seed},
                                   {"class_family", std::move(class_family)},
                                   {"class_column", std::move(class_column)},
                                   {"valence_family", family_name(synth.info.valence_family)},
                                   {"arousal_family", family_name(synth.info.arousal_family)}});
      out << "wrote " << synth.dataset.size() << " records to " << manifest.string() << "\n";
    } else {
      throw ValidationError("unknown synth kind '" + args.kind + "' (expected admixture or hybrid)");
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

const std::vector<ReferenceRow>& emotion6_reference_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"LLF", 38.9, 0.577, 0.820},
      {"CNNR", -1.0, 0.480, 0.847},
      {"ImageNet", 45.83, 0.559, 0.818},
      {"Places205", 43.16, 0.548, 0.827},
      {"LLF+ImageNet", 44.50, 0.588, 0.824},
      {"LLF+Places205", 47.00, 0.583, 0.831},
      {"ImageNet+Places205", 49.83, 0.518, 0.830},
      {"LLF+ImageNet+Places205", 42.00, 0.574, 0.823},
      {"Hybrid Model", 52.00, 0.493, 0.839},
  };
  return rows;
}

const std::vector<ReferenceVaRow>& emotion6_va_reference_rows() {
  static const std::vector<ReferenceVaRow> rows = {
      {"LLF", 1.347, 0.734},
      {"CNNR", 1.219, 0.741},
      {"ImageNet", 1.5851, 0.6898},
      {"Places205", 1.3544, 0.6826},
      {"LLF+ImageNet", 1.5831, 0.6781},
      {"LLF+Places205", 1.2093, 0.6766},
      {"ImageNet+Places205", 1.273, 0.6802},
      {"LLF+ImageNet+Places205", 1.265, 0.6703},
      {"Hybrid Model", 1.2093, 0.6802},
  };
  return rows;
}

}  // namespace affect
