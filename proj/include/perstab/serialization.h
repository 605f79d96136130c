#pragma once

#include <string>

#include <json.hpp>

#include "perstab/detectability.h"
#include "perstab/heat_example.h"
#include "perstab/spectral.h"
#include "perstab/stabilizer.h"
#include "perstab/system_model.h"

namespace perstab {

using Json = nlohmann::json;

/// Matrices are written as arrays of rows.
Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j);

/// {"label", "period", "dim_state", "dim_control", "a", "d", "b"} where d
/// and b are sampler objects. Throws std::invalid_argument for samplers
/// built from an evaluator (no spec to write).
Json system_to_json(const PeriodicSystem& sys);
/// Validates through build_system; throws std::invalid_argument on
/// malformed input.
PeriodicSystem system_from_json(const Json& j);
/// Throws std::runtime_error when the file cannot be read or parsed.
PeriodicSystem load_system_file(const std::string& path);

Json certificate_to_json(const DetectabilityCertificate& cert);
DetectabilityCertificate certificate_from_json(const Json& j);

Json spectrum_to_json(const SpectralSummary& s);
Json decay_to_json(const DecayFit& fit);
Json ucp_to_json(const UniqueContinuationResult& r);
Json heat_report_to_json(const HeatReport& r);

/// Two-space indentation, trailing newline. Key order is lexicographic, so
/// equal inputs give byte-identical text.
std::string dump_json(const Json& j);

}  // namespace perstab
