#pragma once

#include <string>
#include <vector>

#include "cldnav/simulate.hpp"

namespace cldnav {

/// Writes one trajectory SVG per scheme (obstacles black, sensors red,
/// reference green, trajectory blue, robot body outlines yellow) plus bar
/// charts for collected bits and predicted errors. Creates out_dir on
/// demand; output bytes are deterministic for identical reports. Returns the
/// written paths.
std::vector<std::string> emit_plots(const ComparisonReport& report, const Scenario& scenario,
                                    const std::string& out_dir);

}  // namespace cldnav
