#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "oblique/ergodic.hpp"
#include "oblique/grid.hpp"

namespace oblique {

/// %.17g; "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

/// JSON number, or null when non-finite.
nlohmann::json json_number(double v);

/// One CSV line per schedule step. Outer steps (R or eps) are followed by
/// their inner discount steps:
///   level,step,parameter,d_estimate,extrapolate,profile_delta,iterations
std::string schedule_csv(const ErgodicEstimate& est);

nlohmann::json estimate_json(const ErgodicEstimate& est);

/// Grid size, tag counts and value range of a field (not the values).
nlohmann::json field_summary(const GridField& f);

/// x1,x2,tag,value per node, in index order.
std::string field_csv(const GridField& f);

/// Writes text to path, creating parent directories. Throws IoError.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace oblique
