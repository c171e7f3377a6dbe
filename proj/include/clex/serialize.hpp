#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "clex/baseline.hpp"
#include "clex/clustering.hpp"
#include "clex/explain.hpp"

namespace clex {

using Json = nlohmann::ordered_json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

/// Self-describing model document; loading it back reproduces assign() bit for bit.
Json model_to_json(const FittedClusterer& model);
FittedClusterer model_from_json(const Json& j);

Json params_to_json(const ClusterParams& p);
ClusterParams params_from_json(const Json& j);

Json grouping_to_json(const FeatureGrouping& grouping);
Json silhouette_to_json(const SilhouetteReport& report);

Json g2pc_to_json(const G2PCResult& result);
Json l2pc_to_json(const L2PCResult& result);
Json pfi_to_json(const PFIResult& result, const FeatureGrouping& grouping);
Json effects_to_json(const EffectReport& report);

/// `group,label,mean,median,std,min,max` in ranked order.
std::string summary_csv(const std::vector<SummaryRow>& rows);
/// One row per (group, repeat).
std::string g2pc_tensor_csv(const G2PCResult& result);
/// One row per (sample, group, repeat).
std::string l2pc_tensor_csv(const L2PCResult& result);
/// Same columns as summary_csv; mean is the signed grand mean effect,
/// median/std/min/max are across folds.
std::string effects_summary_csv(const EffectReport& report);

}  // namespace clex
