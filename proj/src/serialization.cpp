#include "affect/serialization.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace affect {

namespace {

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < m.rows; ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  return ordered_json{{"rows", m.rows}, {"cols", m.cols}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const ordered_json& j) {
  Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  const auto& rows = j.at("data");
  if (static_cast<int>(rows.size()) != m.rows) throw ValidationError("matrix JSON: row count mismatch");
  for (int r = 0; r < m.rows; ++r) {
    const auto& row = rows[static_cast<size_t>(r)];
    if (static_cast<int>(row.size()) != m.cols) throw ValidationError("matrix JSON: column count mismatch");
    for (int c = 0; c < m.cols; ++c) m.at(r, c) = row[static_cast<size_t>(c)].get<double>();
  }
  return m;
}

ordered_json subset_to_json(const FeatureSubset& s) {
  ordered_json out = ordered_json::array();
  for (FamilyTag tag : s.families) out.push_back(family_name(tag));
  return out;
}

FeatureSubset subset_from_json(const ordered_json& j) {
  FeatureSubset s;
  for (const auto& name : j) s.families.push_back(family_from_name(name.get<std::string>()));
  return s;
}

double cell_value_from_json(const ordered_json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

ordered_json cell_value_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

ordered_json search_cell_to_json(const SubsetSearchCell& c) {
  if (!c.available) return ordered_json{{"available", false}};
  return ordered_json{{"available", true},
                      {"params", kernel_params_to_json(c.params)},
                      {"cv_score", c.cv_score},
                      {"training_mse", cell_value_to_json(c.training_mse)},
                      {"warning", c.warning}};
}

SubsetSearchCell search_cell_from_json(const ordered_json& j) {
  SubsetSearchCell c;
  c.available = j.at("available").get<bool>();
  if (!c.available) {
    c.training_mse = std::numeric_limits<double>::quiet_NaN();
    return c;
  }
  c.params = kernel_params_from_json(j.at("params"));
  c.cv_score = j.at("cv_score").get<double>();
  c.training_mse = cell_value_from_json(j.at("training_mse"));
  c.warning = j.at("warning").get<bool>();
  return c;
}

}  // namespace

ordered_json kernel_params_to_json(const KernelParams& p) {
  return ordered_json{{"gamma", p.gamma}, {"C", p.c}, {"epsilon", p.epsilon}};
}

KernelParams kernel_params_from_json(const ordered_json& j) {
  KernelParams p;
  p.gamma = j.at("gamma").get<double>();
  p.c = j.at("C").get<double>();
  p.epsilon = j.value("epsilon", 0.0);
  return p;
}

ordered_json svr_model_to_json(const SvrModel& m) {
  return ordered_json{{"kind", "svr"},
                      {"params", kernel_params_to_json(m.params)},
                      {"bias", m.bias},
                      {"support_vectors", matrix_to_json(m.support_vectors)},
                      {"dual_coeffs", m.dual_coeffs}};
}

SvrModel svr_model_from_json(const ordered_json& j) {
  if (j.at("kind").get<std::string>() != "svr") throw ValidationError("model JSON: expected kind 'svr'");
  SvrModel m;
  m.params = kernel_params_from_json(j.at("params"));
  m.bias = j.at("bias").get<double>();
  m.support_vectors = matrix_from_json(j.at("support_vectors"));
  m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
  if (static_cast<int>(m.dual_coeffs.size()) != m.support_vectors.rows)
    throw ValidationError("model JSON: coefficient count does not match support vectors");
  return m;
}

ordered_json svc_model_to_json(const SvcModel& m) {
  return ordered_json{{"kind", "svc"},
                      {"params", kernel_params_to_json(m.params)},
                      {"bias", m.bias},
                      {"support_vectors", matrix_to_json(m.support_vectors)},
                      {"dual_coeffs", m.dual_coeffs}};
}

SvcModel svc_model_from_json(const ordered_json& j) {
  if (j.at("kind").get<std::string>() != "svc") throw ValidationError("model JSON: expected kind 'svc'");
  SvcModel m;
  m.params = kernel_params_from_json(j.at("params"));
  m.bias = j.at("bias").get<double>();
  m.support_vectors = matrix_from_json(j.at("support_vectors"));
  m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
  if (static_cast<int>(m.dual_coeffs.size()) != m.support_vectors.rows)
    throw ValidationError("model JSON: coefficient count does not match support vectors");
  return m;
}

ordered_json preprocessing_to_json(const Preprocessing& p) {
  ordered_json j;
  if (p.llf_scaler)
    j["llf_scaler"] = ordered_json{{"min", p.llf_scaler->min}, {"max", p.llf_scaler->max}};
  else
    j["llf_scaler"] = nullptr;
  ordered_json filters;
  for (const auto& [tag, filter] : p.concept_filters)
    filters[family_name(tag)] = ordered_json{{"kept_indices", filter.kept_indices},
                                             {"detect_threshold", filter.detect_threshold},
                                             {"frequency_threshold", filter.frequency_threshold}};
  j["concept_filters"] = std::move(filters);
  return j;
}

Preprocessing preprocessing_from_json(const ordered_json& j) {
  Preprocessing p;
  if (j.contains("llf_scaler") && !j.at("llf_scaler").is_null()) {
    LlfScaler s;
    s.min = j.at("llf_scaler").at("min").get<std::vector<double>>();
    s.max = j.at("llf_scaler").at("max").get<std::vector<double>>();
    if (s.min.size() != s.max.size()) throw ValidationError("scaler JSON: min/max length mismatch");
    p.llf_scaler = std::move(s);
  }
  if (j.contains("concept_filters"))
    for (const auto& [name, fj] : j.at("concept_filters").items()) {
      ConceptFilter f;
      f.kept_indices = fj.at("kept_indices").get<std::vector<int>>();
      f.detect_threshold = fj.at("detect_threshold").get<double>();
      f.frequency_threshold = fj.at("frequency_threshold").get<double>();
      p.concept_filters[family_from_name(name)] = std::move(f);
    }
  return p;
}

ordered_json profile_to_json(const EmotionProfileMatrix& p) {
  ordered_json columns = ordered_json::array();
  for (int j = 0; j < kNumEmotions; ++j) {
    ordered_json col = ordered_json::array();
    for (int r = 0; r < p.dim(); ++r) col.push_back(p.profiles.at(r, j));
    columns.push_back(std::move(col));
  }
  return ordered_json{{"concept_names", p.concept_names}, {"columns", std::move(columns)}};
}

EmotionProfileMatrix profile_from_json(const ordered_json& j) {
  EmotionProfileMatrix p;
  p.concept_names = j.at("concept_names").get<std::vector<std::string>>();
  const auto& columns = j.at("columns");
  if (static_cast<int>(columns.size()) != kNumEmotions)
    throw ValidationError("profile JSON: expected 7 columns");
  const int d = static_cast<int>(columns[0].size());
  p.profiles = Matrix(d, kNumEmotions);
  for (int c = 0; c < kNumEmotions; ++c) {
    if (static_cast<int>(columns[static_cast<size_t>(c)].size()) != d)
      throw ValidationError("profile JSON: ragged columns");
    for (int r = 0; r < d; ++r)
      p.profiles.at(r, c) = columns[static_cast<size_t>(c)][static_cast<size_t>(r)].get<double>();
  }
  return p;
}

ordered_json hybrid_bundle_to_json(const HybridBuild& build, const ordered_json& config) {
  ordered_json classes = ordered_json::array();
  for (int c = 0; c < kNumEmotions; ++c) {
    const auto& entry = build.ensemble.classes[static_cast<size_t>(c)];
    classes.push_back(ordered_json{{"class", c},
                                   {"name", kEmotionNames[static_cast<size_t>(c)]},
                                   {"subset", subset_to_json(entry.subset)},
                                   {"params", kernel_params_to_json(entry.params)},
                                   {"training_mse", entry.training_mse},
                                   {"warning", entry.warning},
                                   {"model", svr_model_to_json(entry.model)}});
  }
  ordered_json mse_table = ordered_json::array();
  ordered_json cells = ordered_json::array();
  for (int c = 0; c < kNumEmotions; ++c) {
    ordered_json row = ordered_json::array();
    ordered_json cell_row = ordered_json::array();
    for (int s = 0; s < 7; ++s) {
      row.push_back(cell_value_to_json(build.mse_table[static_cast<size_t>(c)][static_cast<size_t>(s)]));
      cell_row.push_back(search_cell_to_json(build.cells[static_cast<size_t>(c)][static_cast<size_t>(s)]));
    }
    mse_table.push_back(std::move(row));
    cells.push_back(std::move(cell_row));
  }
  ordered_json subset_order = ordered_json::array();
  for (const auto& s : enumerate_subsets()) subset_order.push_back(s.label());
  return ordered_json{{"kind", "hybrid"},
                      {"config", config},
                      {"preprocessing", preprocessing_to_json(build.ensemble.prep)},
                      {"subset_order", std::move(subset_order)},
                      {"classes", std::move(classes)},
                      {"mse_table", std::move(mse_table)},
                      {"search_cells", std::move(cells)}};
}

HybridBuild hybrid_bundle_from_json(const ordered_json& j) {
  if (j.at("kind").get<std::string>() != "hybrid")
    throw ValidationError("bundle JSON: expected kind 'hybrid'");
  HybridBuild build;
  build.ensemble.prep = preprocessing_from_json(j.at("preprocessing"));
  const auto& classes = j.at("classes");
  if (static_cast<int>(classes.size()) != kNumEmotions)
    throw ValidationError("bundle JSON: expected 7 class entries");
  for (const auto& cj : classes) {
    const int c = cj.at("class").get<int>();
    if (c < 0 || c >= kNumEmotions) throw ValidationError("bundle JSON: class index out of range");
    auto& entry = build.ensemble.classes[static_cast<size_t>(c)];
    entry.subset = subset_from_json(cj.at("subset"));
    entry.params = kernel_params_from_json(cj.at("params"));
    entry.training_mse = cj.at("training_mse").get<double>();
    entry.warning = cj.at("warning").get<bool>();
    entry.model = svr_model_from_json(cj.at("model"));
  }
  for (int c = 0; c < kNumEmotions; ++c)
    for (int s = 0; s < 7; ++s) {
      build.mse_table[static_cast<size_t>(c)][static_cast<size_t>(s)] =
          cell_value_from_json(j.at("mse_table")[static_cast<size_t>(c)][static_cast<size_t>(s)]);
      build.cells[static_cast<size_t>(c)][static_cast<size_t>(s)] =
          search_cell_from_json(j.at("search_cells")[static_cast<size_t>(c)][static_cast<size_t>(s)]);
    }
  return build;
}

namespace {

ordered_json va_entry_to_json(const VaEntry& entry) {
  return ordered_json{{"subset", subset_to_json(entry.subset)},
                      {"params", kernel_params_to_json(entry.params)},
                      {"training_mse", entry.training_mse},
                      {"warning", entry.warning},
                      {"model", svr_model_to_json(entry.model)}};
}

VaEntry va_entry_from_json(const ordered_json& j) {
  VaEntry entry;
  entry.subset = subset_from_json(j.at("subset"));
  entry.params = kernel_params_from_json(j.at("params"));
  entry.training_mse = j.at("training_mse").get<double>();
  entry.warning = j.at("warning").get<bool>();
  entry.model = svr_model_from_json(j.at("model"));
  return entry;
}

}  // namespace

ordered_json va_bundle_to_json(const VaBuild& build, const ordered_json& config) {
  ordered_json mse_table = ordered_json::array();
  ordered_json cells = ordered_json::array();
  for (int t = 0; t < 2; ++t) {
    ordered_json row = ordered_json::array();
    ordered_json cell_row = ordered_json::array();
    for (int s = 0; s < 7; ++s) {
      row.push_back(cell_value_to_json(build.mse_table[static_cast<size_t>(t)][static_cast<size_t>(s)]));
      cell_row.push_back(search_cell_to_json(build.cells[static_cast<size_t>(t)][static_cast<size_t>(s)]));
    }
    mse_table.push_back(std::move(row));
    cells.push_back(std::move(cell_row));
  }
  ordered_json subset_order = ordered_json::array();
  for (const auto& s : enumerate_subsets()) subset_order.push_back(s.label());
  return ordered_json{{"kind", "va"},
                      {"config", config},
                      {"preprocessing", preprocessing_to_json(build.ensemble.prep)},
                      {"subset_order", std::move(subset_order)},
                      {"valence", va_entry_to_json(build.ensemble.valence)},
                      {"arousal", va_entry_to_json(build.ensemble.arousal)},
                      {"mse_table", std::move(mse_table)},
                      {"search_cells", std::move(cells)}};
}

VaBuild va_bundle_from_json(const ordered_json& j) {
  if (j.at("kind").get<std::string>() != "va") throw ValidationError("bundle JSON: expected kind 'va'");
  VaBuild build;
  build.ensemble.prep = preprocessing_from_json(j.at("preprocessing"));
  build.ensemble.valence = va_entry_from_json(j.at("valence"));
  build.ensemble.arousal = va_entry_from_json(j.at("arousal"));
  for (int t = 0; t < 2; ++t)
    for (int s = 0; s < 7; ++s) {
      build.mse_table[static_cast<size_t>(t)][static_cast<size_t>(s)] =
          cell_value_from_json(j.at("mse_table")[static_cast<size_t>(t)][static_cast<size_t>(s)]);
      build.cells[static_cast<size_t>(t)][static_cast<size_t>(s)] =
          search_cell_from_json(j.at("search_cells")[static_cast<size_t>(t)][static_cast<size_t>(s)]);
    }
  return build;
}

ordered_json artphoto_bundle_to_json(const ArtphotoBuild& build, const ordered_json& config) {
  ordered_json classes = ordered_json::array();
  for (const auto& entry : build.ensemble.classes)
    classes.push_back(ordered_json{{"class", entry.class_index},
                                   {"subset", subset_to_json(entry.subset)},
                                   {"params", kernel_params_to_json(entry.params)},
                                   {"selection_score", entry.selection_score},
                                   {"warning", entry.warning},
                                   {"model", svc_model_to_json(entry.model)}});
  ordered_json score_table = ordered_json::array();
  ordered_json cells = ordered_json::array();
  for (size_t ci = 0; ci < build.score_table.size(); ++ci) {
    ordered_json row = ordered_json::array();
    ordered_json cell_row = ordered_json::array();
    for (int s = 0; s < 7; ++s) {
      row.push_back(cell_value_to_json(build.score_table[ci][static_cast<size_t>(s)]));
      cell_row.push_back(search_cell_to_json(build.cells[ci][static_cast<size_t>(s)]));
    }
    score_table.push_back(std::move(row));
    cells.push_back(std::move(cell_row));
  }
  ordered_json subset_order = ordered_json::array();
  for (const auto& s : enumerate_subsets()) subset_order.push_back(s.label());
  return ordered_json{{"kind", "artphoto"},
                      {"config", config},
                      {"tpr_strategy", tpr_strategy_name(build.ensemble.strategy)},
                      {"preprocessing", preprocessing_to_json(build.ensemble.prep)},
                      {"subset_order", std::move(subset_order)},
                      {"classes", std::move(classes)},
                      {"score_table", std::move(score_table)},
                      {"search_cells", std::move(cells)}};
}

ArtphotoBuild artphoto_bundle_from_json(const ordered_json& j) {
  if (j.at("kind").get<std::string>() != "artphoto")
    throw ValidationError("bundle JSON: expected kind 'artphoto'");
  ArtphotoBuild build;
  build.ensemble.strategy = tpr_strategy_from_name(j.at("tpr_strategy").get<std::string>());
  build.ensemble.prep = preprocessing_from_json(j.at("preprocessing"));
  for (const auto& cj : j.at("classes")) {
    ArtphotoEntry entry;
    entry.class_index = cj.at("class").get<int>();
    entry.subset = subset_from_json(cj.at("subset"));
    entry.params = kernel_params_from_json(cj.at("params"));
    entry.selection_score = cj.at("selection_score").get<double>();
    entry.warning = cj.at("warning").get<bool>();
    entry.model = svc_model_from_json(cj.at("model"));
    build.ensemble.classes.push_back(std::move(entry));
  }
  const auto& table = j.at("score_table");
  const auto& cells = j.at("search_cells");
  build.score_table.resize(table.size());
  build.cells.resize(cells.size());
  for (size_t ci = 0; ci < table.size(); ++ci)
    for (int s = 0; s < 7; ++s) {
      build.score_table[ci][static_cast<size_t>(s)] =
          cell_value_from_json(table[ci][static_cast<size_t>(s)]);
      build.cells[ci][static_cast<size_t>(s)] = search_cell_from_json(cells[ci][static_cast<size_t>(s)]);
    }
  return build;
}

ordered_json evaluation_report_to_json(const EvaluationReport& report) {
  ordered_json j{{"accuracy", report.accuracy},
                 {"accuracy_percent", report.accuracy * 100.0},
                 {"mean_kld", report.mean_kld},
                 {"mean_bc", report.mean_bc}};
  if (report.valence_aad) j["valence_aad"] = *report.valence_aad;
  if (report.arousal_aad) j["arousal_aad"] = *report.arousal_aad;
  j["records"] = ordered_json::array();
  for (const auto& r : report.records)
    j["records"].push_back(ordered_json{{"id", r.id},
                                        {"kld", r.kld},
                                        {"bc", r.bc},
                                        {"pred", r.predicted_class},
                                        {"true", r.true_class}});
  return j;
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw ValidationError("write failed: " + path.string());
}

ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace affect
