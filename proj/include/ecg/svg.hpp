#pragma once

#include <string>
#include <vector>

#include "ecg/preprocessing.hpp"

namespace ecg {

struct PlotOptions {
    std::vector<std::string> leads = {"II", "V1", "V5"};
    double start_s = 0.0;
    double duration_s = 3.0;
    int width = 1200;
    int lead_height = 180;
    std::string title;
};

/// Raw signal per lead with wave boundaries drawn as vertical lines: P dashed,
/// QRS solid, T dotted. Missing leads are skipped.
std::string delineation_svg(const DelineatedRecord& d, const PlotOptions& options = {});

}  // namespace ecg
