#pragma once

// JSON views of the library's value types, used by reports and scenarios.
// Exact ratios serialize as "n/d" strings next to a decimal rendering.

#include <nlohmann/json.hpp>

#include "iqm/grids.hpp"
#include "iqm/probtree.hpp"
#include "iqm/ratio.hpp"
#include "iqm/spacetime.hpp"
#include "iqm/stats.hpp"

namespace iqm {

using Json = nlohmann::json;

Json to_json(const Ratio& r);
Json to_json(const SpacetimeDomain& d);
Json to_json(const FrequencyTable& t);
Json to_json(const ProbabilityLaw& law);
Json to_json(const ValidationReport& v);
Json to_json(const DependenceReport& d);
Json to_json(const Branch& b);
Json to_json(const ProbabilityTree& t);
Json to_json(const MetaDependenceReport& m);
Json to_json(const DeficitReport& d);
Json to_json(const MeasurementRecord& r);
Json to_json(const TimeOfFlight& t);

SpacetimeDomain domain_from_json(const Json& j);

/// CSV with header "grid,value_code,count,frequency".
std::string to_csv(const FrequencyTable& t);

}  // namespace iqm
