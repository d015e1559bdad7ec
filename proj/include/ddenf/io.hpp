#pragma once

#include <string>

#include "json.hpp"

#include "ddenf/branch.hpp"
#include "ddenf/nf.hpp"

namespace ddenf {

using Json = nlohmann::json;

// profile schema: {T, L, M, boundary, field, values} with row-major values
// over the basis points (re/im interleaved for complex profiles)
Json profile_to_json(const RealProfile& p);
Json profile_to_json(const ComplexProfile& p);
RealProfile real_profile_from_json(const Json& j);
ComplexProfile complex_profile_from_json(const Json& j);

Json orbit_to_json(const PeriodicOrbit& orbit);
PeriodicOrbit orbit_from_json(const Json& j);

Json report_to_json(const NormalFormReport& rep);

Json events_to_json(const Codim1Branch& branch);

void write_cycle_branch_csv(const std::string& path, const CycleBranch& branch);
void write_codim1_branch_csv(const std::string& path, const Codim1Branch& branch);
Codim1Branch read_codim1_branch_csv(const std::string& path);

/// static bifurcation-diagram SVG: one polyline per branch in the (p1, p2)
/// plane with markers at codim-2 events
void write_branch_svg(const std::string& path,
                      const std::vector<Codim1Branch>& branches);

void write_orbit_profile_csv(const std::string& path, const PeriodicOrbit& orbit);

Json   load_json(const std::string& path);
void   save_json(const std::string& path, const Json& j);

}  // namespace ddenf
