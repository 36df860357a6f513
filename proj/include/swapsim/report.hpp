#pragma once

#include <string>
#include <vector>

#include "swapsim/pipeline.hpp"

namespace swapsim::report {

// Deterministic key<TAB>value rendering: same result object, byte-identical text.
// Numbers use %.10g; wall-clock time never appears.
std::string render_report(const pipeline::RunResult& result);

// One row per sweep point with the headline statistics for the active measurement.
std::string render_sweep(const std::string& key, const std::vector<pipeline::SweepPoint>& points);

std::string format_number(double value);

}  // namespace swapsim::report
