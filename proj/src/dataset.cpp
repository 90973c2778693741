#include "affect/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "affect/csv.hpp"
#include "affect/rng.hpp"

namespace affect {

namespace {

using ordered_json = nlohmann::ordered_json;

std::unordered_map<std::string, int> index_by_id(const CsvTable& table,
                                                 const std::filesystem::path& file) {
  std::unordered_map<std::string, int> map;
  map.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& id = table.rows[r][0];
    if (id.empty()) throw ValidationError(file.string() + ": empty id at row " + std::to_string(r + 2));
    if (!map.emplace(id, static_cast<int>(r)).second)
      throw ValidationError(file.string() + ": duplicate id '" + id + "'");
  }
  return map;
}

FamilyData load_family_csv(FamilyTag tag, int dimension, const std::filesystem::path& file,
                           const std::vector<std::string>& ids,
                           const std::unordered_map<std::string, int>* canonical) {
  const CsvTable table = read_csv(file);
  if (table.header.empty() || table.header[0] != "id")
    throw ValidationError(file.string() + ": first header column must be 'id'");
  const int cols = static_cast<int>(table.header.size()) - 1;
  if (cols != dimension)
    throw ValidationError(file.string() + ": dimension mismatch, manifest declares " +
                          std::to_string(dimension) + " but file has " + std::to_string(cols));
  FamilyData fam;
  fam.tag = tag;
  fam.dimension = dimension;
  fam.column_names.assign(table.header.begin() + 1, table.header.end());
  fam.values = Matrix(static_cast<int>(ids.size()), dimension);

  auto rows_by_id = index_by_id(table, file);
  if (canonical != nullptr && table.rows.size() != ids.size())
    throw ValidationError(file.string() + ": row count " + std::to_string(table.rows.size()) +
                          " does not match dataset size " + std::to_string(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    auto it = rows_by_id.find(ids[i]);
    if (it == rows_by_id.end())
      throw ValidationError(file.string() + ": missing feature row for id '" + ids[i] + "'");
    const auto& cells = table.rows[static_cast<size_t>(it->second)];
    for (int c = 0; c < dimension; ++c)
      fam.values.at(static_cast<int>(i), c) =
          parse_double_cell(cells[static_cast<size_t>(c) + 1], file, it->second + 2, c + 2);
  }
  return fam;
}

EmotionDistribution parse_distribution_row(const std::vector<std::string>& cells, int offset,
                                           const std::filesystem::path& file, int row) {
  EmotionDistribution d;
  for (int i = 0; i < kNumEmotions; ++i) {
    const double v = parse_double_cell(cells[static_cast<size_t>(offset + i)], file, row, offset + i + 1);
    if (v < 0.0)
      throw ValidationError(file.string() + ": negative probability at row " + std::to_string(row));
    d[i] = v;
  }
  const double s = d.sum();
  if (!(s > 0.0))
    throw ValidationError(file.string() + ": label row sums to zero at row " + std::to_string(row));
  // Accept unnormalized nonnegative rows (vote counts, rounded exports) and
  // put them on the simplex here.
  for (int i = 0; i < kNumEmotions; ++i) d[i] /= s;
  return d;
}

void expect_header(const CsvTable& table, const std::vector<std::string>& expected,
                   const std::filesystem::path& file) {
  if (table.header != expected) {
    std::string want;
    for (size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    throw ValidationError(file.string() + ": label header must be '" + want + "'");
  }
}

std::vector<std::string> distribution_header() {
  std::vector<std::string> h = {"id"};
  for (const char* n : kEmotionNames) h.emplace_back(n);
  return h;
}

void load_labels(Dataset& ds, LabelKind kind, const std::filesystem::path& file) {
  const CsvTable table = read_csv(file);
  switch (kind) {
    case LabelKind::Distribution:
      expect_header(table, distribution_header(), file);
      break;
    case LabelKind::DistributionVa: {
      auto h = distribution_header();
      h.emplace_back("valence");
      h.emplace_back("arousal");
      expect_header(table, h, file);
      break;
    }
    case LabelKind::Va:
      expect_header(table, {"id", "valence", "arousal"}, file);
      break;
    case LabelKind::Hard:
      expect_header(table, {"id", "class_index"}, file);
      break;
    case LabelKind::None:
      return;
  }
  auto rows_by_id = index_by_id(table, file);
  ds.labels.resize(ds.ids.size());
  for (size_t i = 0; i < ds.ids.size(); ++i) {
    auto it = rows_by_id.find(ds.ids[i]);
    if (it == rows_by_id.end())
      throw ValidationError(file.string() + ": missing label for id '" + ds.ids[i] + "'");
    const auto& cells = table.rows[static_cast<size_t>(it->second)];
    const int row = it->second + 2;
    Label lab;
    if (kind == LabelKind::Distribution || kind == LabelKind::DistributionVa)
      lab.distribution = parse_distribution_row(cells, 1, file, row);
    if (kind == LabelKind::DistributionVa)
      lab.va = VaPair{parse_double_cell(cells[8], file, row, 9),
                      parse_double_cell(cells[9], file, row, 10)};
    if (kind == LabelKind::Va)
      lab.va = VaPair{parse_double_cell(cells[1], file, row, 2),
                      parse_double_cell(cells[2], file, row, 3)};
    if (kind == LabelKind::Hard) {
      const double v = parse_double_cell(cells[1], file, row, 2);
      if (v < 0.0 || v != std::floor(v))
        throw ValidationError(file.string() + ": class_index must be a nonnegative integer at row " +
                              std::to_string(row));
      lab.hard_class = static_cast<int>(v);
    }
    ds.labels[i] = std::move(lab);
  }
  ds.label_kind = kind;
}

std::vector<std::string> label_row(const std::string& id, const Label& lab, LabelKind kind) {
  std::vector<std::string> row = {id};
  if (kind == LabelKind::Distribution || kind == LabelKind::DistributionVa)
    for (int i = 0; i < kNumEmotions; ++i) row.push_back(fmt_double((*lab.distribution)[i]));
  if (kind == LabelKind::DistributionVa || kind == LabelKind::Va) {
    row.push_back(fmt_double(lab.va->valence));
    row.push_back(fmt_double(lab.va->arousal));
  }
  if (kind == LabelKind::Hard) row.push_back(std::to_string(*lab.hard_class));
  return row;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("missing file: " + manifest_path.string());
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError(manifest_path.string() + ": invalid JSON: " + e.what());
  }
  const auto base = manifest_path.parent_path();

  Dataset ds;
  ds.provenance = manifest_path.string();
  ds.name = manifest.value("name", std::string("dataset"));
  if (!manifest.contains("families") || !manifest["families"].is_array() ||
      manifest["families"].empty())
    throw ValidationError(manifest_path.string() + ": manifest must list at least one family");

  bool first = true;
  std::unordered_map<std::string, int> canonical;
  for (const auto& fam : manifest["families"]) {
    const FamilyTag tag = family_from_name(fam.at("tag").get<std::string>());
    const int dim = fam.at("dimension").get<int>();
    if (dim <= 0) throw ValidationError(manifest_path.string() + ": family dimension must be positive");
    const auto file = base / fam.at("file").get<std::string>();
    if (first) {
      // First family fixes the record order; later files align to it by id.
      const CsvTable probe = read_csv(file);
      canonical = index_by_id(probe, file);
      ds.ids.reserve(probe.rows.size());
      for (const auto& r : probe.rows) ds.ids.push_back(r[0]);
      first = false;
    }
    if (ds.family(tag) != nullptr)
      throw ValidationError(manifest_path.string() + ": family listed twice: " + family_name(tag));
    ds.families.push_back(load_family_csv(tag, dim, file, ds.ids, &canonical));
  }
  if (ds.ids.empty()) throw ValidationError(manifest_path.string() + ": dataset has no records");

  if (manifest.contains("labels") && !manifest["labels"].is_null()) {
    const auto& lab = manifest["labels"];
    const LabelKind kind = label_kind_from_name(lab.at("kind").get<std::string>());
    load_labels(ds, kind, base / lab.at("file").get<std::string>());
  }
  ds.validate();
  return ds;
}

std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ordered_json manifest;
  manifest["name"] = ds.name;
  manifest["families"] = ordered_json::array();
  for (const auto& fam : ds.families) {
    const std::string fname = ds.name + "_" + family_name(fam.tag) + ".csv";
    std::vector<std::string> header = {"id"};
    header.insert(header.end(), fam.column_names.begin(), fam.column_names.end());
    std::vector<std::vector<std::string>> rows;
    rows.reserve(ds.ids.size());
    for (int i = 0; i < ds.size(); ++i) {
      std::vector<std::string> row = {ds.ids[static_cast<size_t>(i)]};
      for (int c = 0; c < fam.dimension; ++c) row.push_back(fmt_double(fam.values.at(i, c)));
      rows.push_back(std::move(row));
    }
    write_csv(dir / fname, header, rows);
    manifest["families"].push_back({{"tag", family_name(fam.tag)},
                                    {"dimension", fam.dimension},
                                    {"file", fname}});
  }
  if (ds.label_kind != LabelKind::None) {
    const std::string fname = ds.name + "_labels.csv";
    std::vector<std::string> header;
    switch (ds.label_kind) {
      case LabelKind::Distribution: header = distribution_header(); break;
      case LabelKind::DistributionVa:
        header = distribution_header();
        header.emplace_back("valence");
        header.emplace_back("arousal");
        break;
      case LabelKind::Va: header = {"id", "valence", "arousal"}; break;
      case LabelKind::Hard: header = {"id", "class_index"}; break;
      case LabelKind::None: break;
    }
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < ds.size(); ++i)
      rows.push_back(label_row(ds.ids[static_cast<size_t>(i)], ds.labels[static_cast<size_t>(i)],
                               ds.label_kind));
    write_csv(dir / fname, header, rows);
    manifest["labels"] = {{"file", fname}, {"kind", label_kind_name(ds.label_kind)}};
  }
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw ValidationError("cannot write file: " + path.string());
  return path;
}

std::vector<double> normalize_hlc(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) {
    if (!(x >= 0.0)) throw ValidationError("normalize_hlc: negative component");
    total += x;
  }
  if (!(total > 0.0)) throw ValidationError("normalize_hlc: cannot normalize all-zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= total;
  return out;
}

ConceptFilter fit_concept_filter(const Matrix& hlc, double detect_threshold,
                                 double frequency_threshold) {
  if (hlc.rows < 1) throw ValidationError("fit_concept_filter: empty matrix");
  if (detect_threshold < 0.0) throw ValidationError("fit_concept_filter: detect threshold must be >= 0");
  if (!(frequency_threshold > 0.0) || frequency_threshold > 1.0)
    throw ValidationError("fit_concept_filter: frequency threshold must be in (0,1]");
  ConceptFilter filter;
  filter.detect_threshold = detect_threshold;
  filter.frequency_threshold = frequency_threshold;
  double max_freq = 0.0;
  const double needed = frequency_threshold * hlc.rows - 1e-9;
  for (int c = 0; c < hlc.cols; ++c) {
    int detected = 0;
    for (int r = 0; r < hlc.rows; ++r)
      if (hlc.at(r, c) >= detect_threshold) ++detected;
    max_freq = std::max(max_freq, static_cast<double>(detected) / hlc.rows);
    if (static_cast<double>(detected) >= needed) filter.kept_indices.push_back(c);
  }
  if (filter.kept_indices.empty())
    throw ValidationError("no concepts survive filter (max observed frequency " +
                          fmt_double(max_freq) + ")");
  return filter;
}

std::vector<double> apply_concept_filter(const ConceptFilter& filter, std::span<const double> v) {
  std::vector<double> selected;
  selected.reserve(filter.kept_indices.size());
  for (int idx : filter.kept_indices) {
    if (idx < 0 || static_cast<size_t>(idx) >= v.size())
      throw ValidationError("apply_concept_filter: vector shorter than kept index");
    selected.push_back(v[static_cast<size_t>(idx)]);
  }
  return normalize_hlc(selected);
}

LlfScaler fit_llf_scaler(const Matrix& llf) {
  if (llf.rows < 1) throw ValidationError("fit_llf_scaler: empty matrix");
  LlfScaler s;
  s.min.assign(static_cast<size_t>(llf.cols), 0.0);
  s.max.assign(static_cast<size_t>(llf.cols), 0.0);
  for (int c = 0; c < llf.cols; ++c) {
    double lo = llf.at(0, c), hi = llf.at(0, c);
    for (int r = 1; r < llf.rows; ++r) {
      lo = std::min(lo, llf.at(r, c));
      hi = std::max(hi, llf.at(r, c));
    }
    s.min[static_cast<size_t>(c)] = lo;
    s.max[static_cast<size_t>(c)] = hi;
  }
  return s;
}

std::vector<double> apply_llf_scaler(const LlfScaler& scaler, std::span<const double> v) {
  if (v.size() != scaler.min.size()) throw ValidationError("apply_llf_scaler: dimension mismatch");
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    const double range = scaler.max[i] - scaler.min[i];
    const double t = range > 0.0 ? (v[i] - scaler.min[i]) / range : 0.0;
    out[i] = std::clamp(t, 0.0, 1.0);
  }
  return out;
}

Dataset subset_dataset(const Dataset& ds, std::span<const int> rows) {
  Dataset out;
  out.name = ds.name;
  out.provenance = ds.provenance;
  out.label_kind = ds.label_kind;
  for (int r : rows) {
    out.ids.push_back(ds.ids[static_cast<size_t>(r)]);
    if (!ds.labels.empty()) out.labels.push_back(ds.labels[static_cast<size_t>(r)]);
  }
  for (const auto& fam : ds.families) {
    FamilyData f;
    f.tag = fam.tag;
    f.dimension = fam.dimension;
    f.column_names = fam.column_names;
    f.values = fam.values.select_rows(rows);
    out.families.push_back(std::move(f));
  }
  return out;
}

SplitResult stratified_split(const Dataset& ds, double test_fraction, uint64_t seed) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    throw ValidationError("stratified_split: test fraction must be in (0,1)");
  if (ds.label_kind == LabelKind::None)
    throw ValidationError("stratified_split: every record needs a label");

  std::map<int, std::vector<int>> strata;
  for (int i = 0; i < ds.size(); ++i) strata[ds.stratum_of(i)].push_back(i);

  Rng rng = Rng::stream(seed, "split");
  SplitResult result;
  std::vector<int> train_rows, test_rows;
  for (auto& [cls, rows] : strata) {
    if (rows.size() < 2) {
      result.warnings.push_back("class " + std::to_string(cls) +
                                " has fewer than 2 records; kept entirely in training set");
      train_rows.insert(train_rows.end(), rows.begin(), rows.end());
      continue;
    }
    const int n = static_cast<int>(rows.size());
    int take = static_cast<int>(std::lround(test_fraction * n));
    take = std::clamp(take, 0, n - 1);
    rng.shuffle(rows);
    for (int k = 0; k < n; ++k)
      (k < take ? test_rows : train_rows).push_back(rows[static_cast<size_t>(k)]);
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  result.train = subset_dataset(ds, train_rows);
  result.test = subset_dataset(ds, test_rows);
  return result;
}

SynthAdmixture synth_admixture(int d, int n, double noise_std, uint64_t seed) {
  if (d < kNumEmotions) throw ValidationError("synth_admixture: d must be >= 7");
  if (n < 1) throw ValidationError("synth_admixture: n must be >= 1");
  if (noise_std < 0.0) throw ValidationError("synth_admixture: noise_std must be >= 0");

  Rng rng = Rng::stream(seed, "synth_admixture");
  SynthAdmixture out;
  out.true_profiles = Matrix(d, kNumEmotions);
  for (int j = 0; j < kNumEmotions; ++j) {
    const auto col = rng.dirichlet(d, 1.0);
    for (int r = 0; r < d; ++r) out.true_profiles.at(r, j) = col[static_cast<size_t>(r)];
  }

  Dataset& ds = out.dataset;
  ds.name = "synth_admixture";
  ds.provenance = "synthetic(" + std::to_string(seed) + ")";
  ds.label_kind = LabelKind::Distribution;
  FamilyData fam;
  fam.tag = FamilyTag::ImageNet;
  fam.dimension = d;
  for (int c = 0; c < d; ++c) fam.column_names.push_back("c" + std::to_string(c));
  fam.values = Matrix(n, d);

  for (int i = 0; i < n; ++i) {
    const auto e = rng.dirichlet(kNumEmotions, 1.0);
    EmotionDistribution dist;
    for (int j = 0; j < kNumEmotions; ++j) dist[j] = e[static_cast<size_t>(j)];
    std::vector<double> h(static_cast<size_t>(d), 0.0);
    for (int j = 0; j < kNumEmotions; ++j)
      for (int r = 0; r < d; ++r)
        h[static_cast<size_t>(r)] += out.true_profiles.at(r, j) * dist[j];
    if (noise_std > 0.0) {
      for (double& x : h) x = std::max(0.0, x + noise_std * rng.normal());
      h = normalize_hlc(h);
    }
    for (int r = 0; r < d; ++r) fam.values.at(i, r) = h[static_cast<size_t>(r)];
    ds.ids.push_back("img" + std::to_string(i));
    Label lab;
    lab.distribution = dist;
    ds.labels.push_back(lab);
  }
  ds.families.push_back(std::move(fam));
  ds.validate();
  return out;
}

SynthHybrid synth_hybrid(int records, uint64_t seed, double noise_std) {
  if (records < 1) throw ValidationError("synth_hybrid: records must be >= 1");
  constexpr int kDim = 20;

  SynthHybrid out;
  SynthHybridInfo& info = out.info;
  info.class_family = {FamilyTag::Llf, FamilyTag::ImageNet, FamilyTag::Places,
                       FamilyTag::Llf, FamilyTag::ImageNet, FamilyTag::Places,
                       FamilyTag::Llf};
  info.class_column = {0, 0, 0, 1, 1, 1, 2};
  info.valence_family = FamilyTag::Places;
  info.valence_column = 2;
  info.arousal_family = FamilyTag::ImageNet;
  info.arousal_column = 2;

  Dataset& ds = out.dataset;
  ds.name = "synth_hybrid";
  ds.provenance = "synthetic(" + std::to_string(seed) + ")";
  ds.label_kind = LabelKind::DistributionVa;
  for (FamilyTag tag : kAllFamilies) {
    FamilyData fam;
    fam.tag = tag;
    fam.dimension = kDim;
    for (int c = 0; c < kDim; ++c) fam.column_names.push_back("f" + std::to_string(c));
    fam.values = Matrix(records, kDim);
    ds.families.push_back(std::move(fam));
  }

  // Carrier columns per family: each designated class (and VA target) gets
  // one column holding its latent value, the rest is filler. HLC families
  // are scaled so carriers plus filler sum to exactly one.
  Rng rng = Rng::stream(seed, "synth_hybrid");
  const double hlc_carrier_scale = 0.6 / 3.0;  // three carriers per HLC family

  for (int i = 0; i < records; ++i) {
    ds.ids.push_back("img" + std::to_string(i));
    const auto u = rng.dirichlet(kNumEmotions, 2.0);
    const double w_val = rng.uniform01();
    const double w_ar = rng.uniform01();

    Label lab;
    EmotionDistribution dist;
    for (int j = 0; j < kNumEmotions; ++j) dist[j] = u[static_cast<size_t>(j)];
    lab.distribution = dist;
    lab.va = VaPair{1.0 + 8.0 * w_val, 1.0 + 8.0 * w_ar};
    ds.labels.push_back(lab);

    for (auto& fam : ds.families) {
      std::vector<double> carriers(static_cast<size_t>(kDim), -1.0);  // -1 = filler
      for (int j = 0; j < kNumEmotions; ++j)
        if (info.class_family[static_cast<size_t>(j)] == fam.tag)
          carriers[static_cast<size_t>(info.class_column[static_cast<size_t>(j)])] =
              std::clamp(u[static_cast<size_t>(j)] + noise_std * rng.normal(), 0.0, 1.0);
      if (info.valence_family == fam.tag)
        carriers[static_cast<size_t>(info.valence_column)] =
            std::clamp(w_val + noise_std * rng.normal(), 0.0, 1.0);
      if (info.arousal_family == fam.tag)
        carriers[static_cast<size_t>(info.arousal_column)] =
            std::clamp(w_ar + noise_std * rng.normal(), 0.0, 1.0);

      if (fam.tag == FamilyTag::Llf) {
        for (int c = 0; c < kDim; ++c)
          fam.values.at(i, c) = carriers[static_cast<size_t>(c)] >= 0.0
                                    ? carriers[static_cast<size_t>(c)]
                                    : rng.uniform01();
      } else {
        double carrier_mass = 0.0;
        int n_filler = 0;
        for (int c = 0; c < kDim; ++c) {
          if (carriers[static_cast<size_t>(c)] >= 0.0)
            carrier_mass += carriers[static_cast<size_t>(c)] * hlc_carrier_scale;
          else
            ++n_filler;
        }
        const auto filler = rng.dirichlet(n_filler, 1.0);
        int fi = 0;
        for (int c = 0; c < kDim; ++c) {
          if (carriers[static_cast<size_t>(c)] >= 0.0)
            fam.values.at(i, c) = carriers[static_cast<size_t>(c)] * hlc_carrier_scale;
          else
            fam.values.at(i, c) = (1.0 - carrier_mass) * filler[static_cast<size_t>(fi++)];
        }
      }
    }
  }
  ds.validate();
  return out;
}

}  // namespace affect
