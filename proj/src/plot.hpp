#pragma once

#include "json_io.hpp"

#include <optional>
#include <string>

namespace mdsclt::plot {

/// kind: ellipses | scree | bias-trend | bound-ratios. `n` picks the per_n
/// block (default: largest). Throws ValidationError naming the missing
/// report section.
std::string render_svg(const json_io::json& doc, const std::string& kind, std::optional<Index> n = std::nullopt);

} // namespace mdsclt::plot
