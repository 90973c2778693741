#pragma once

#include <filesystem>

#include <json.hpp>

#include "affect/admixture.hpp"
#include "affect/hybrid.hpp"
#include "affect/metrics.hpp"
#include "affect/svm.hpp"

namespace affect {

using ordered_json = nlohmann::ordered_json;

// JSON forms of trained state. Key order is fixed and doubles round-trip
// exactly, so re-serializing identical state gives identical bytes.

ordered_json kernel_params_to_json(const KernelParams& p);
KernelParams kernel_params_from_json(const ordered_json& j);

ordered_json svr_model_to_json(const SvrModel& m);
SvrModel svr_model_from_json(const ordered_json& j);

ordered_json svc_model_to_json(const SvcModel& m);
SvcModel svc_model_from_json(const ordered_json& j);

ordered_json preprocessing_to_json(const Preprocessing& p);
Preprocessing preprocessing_from_json(const ordered_json& j);

ordered_json profile_to_json(const EmotionProfileMatrix& p);
EmotionProfileMatrix profile_from_json(const ordered_json& j);

/// Ensemble bundles: kind, configuration echo, preprocessing, per-entry
/// subset + params + model, and the full selection table.
ordered_json hybrid_bundle_to_json(const HybridBuild& build, const ordered_json& config);
HybridBuild hybrid_bundle_from_json(const ordered_json& j);

ordered_json va_bundle_to_json(const VaBuild& build, const ordered_json& config);
VaBuild va_bundle_from_json(const ordered_json& j);

ordered_json artphoto_bundle_to_json(const ArtphotoBuild& build, const ordered_json& config);
ArtphotoBuild artphoto_bundle_from_json(const ordered_json& j);

ordered_json evaluation_report_to_json(const EvaluationReport& report);

void write_json_file(const std::filesystem::path& path, const ordered_json& j);
ordered_json read_json_file(const std::filesystem::path& path);

}  // namespace affect
