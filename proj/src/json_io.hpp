#pragma once

// JSON forms of configs and reports. Internal to the library; the C API
// hands these out as strings.

#include "mdsclt/clt.hpp"
#include "mdsclt/cmds.hpp"
#include "mdsclt/harness.hpp"
#include "mdsclt/rawstress.hpp"

#include "json.hpp"

namespace mdsclt::json_io {

using json = nlohmann::json;

json to_json(const Vector& v);
json to_json(const Matrix& m);
Vector vector_from(const json& j, const char* what);
Matrix matrix_from(const json& j, const char* what);

DistributionSpec distribution_from(const json& j);
json to_json(const DistributionSpec& spec);

NoiseSpec noise_from(const json& j);
json to_json(const NoiseSpec& spec);

/// Parses the experiment schema; unknown top-level keys are rejected.
ExperimentConfig config_from(const json& j);
json to_json(const ExperimentConfig& cfg);

json to_json(const McReport& r);
json to_json(const TheoryCov& t);
json to_json(const HeteroCov& h);
json to_json(const BoundTable& t);
json to_json(const DecompositionSummary& s);
json to_json(const HeteroBiasReport& r);
json to_json(const GrowthCheck& g);
json sidecar(const Embedding& e);
json to_json(const StressResult& r);

/// Parses text, turning syntax errors into ValidationError.
json parse(const std::string& text, const char* what);

} // namespace mdsclt::json_io
