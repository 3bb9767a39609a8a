#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rshift/shifttest.hpp"

namespace rshift {

/// Observed curve, global envelope band and p-value annotation. Throws ParameterError without an envelope.
std::string envelope_svg(const TestResult& result, double alpha = 0.05);

/// Side-by-side p-value histograms on [0, 1], one panel per named sample.
std::string pvalue_histogram_svg(const std::vector<std::pair<std::string, std::vector<double>>>& samples,
                                 int bins = 20);

}  // namespace rshift
