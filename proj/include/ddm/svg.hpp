#pragma once

// Native SVG emission for the two figure families the tools produce: boundary
// overlays (exact versus recovered curves, equal aspect) and training-loss
// curves (log ordinate). Output is deterministic: fixed canvas, fixed
// formatting, no timestamps.

#include <string>
#include <vector>

#include "ddm/common.hpp"
#include "ddm/train.hpp"

namespace ddm::svg {

struct Series {
  std::string label;
  std::string color;         // any CSS color
  std::vector<Vec2> points;  // drawn in order
  bool closed = false;       // join last point back to the first
  bool dashed = false;
};

// Equal-aspect overlay with a light coordinate grid, axis labels, and a
// legend. The viewport is the square hull of all points plus 10% padding.
void write_overlay(const std::string& path, const std::string& title,
                   const std::vector<Series>& series);

// Epoch curves for l_ddm / l_phy / l_dc / err on a log10 ordinate. Series
// with no positive values (l_dc under a full aperture) are dropped; isolated
// nonpositive entries are skipped pointwise.
void write_loss_curves(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace ddm::svg
