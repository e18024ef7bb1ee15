#pragma once

#include <cstdint>
#include <vector>

#include "carleman/grid.hpp"

namespace carleman {

// Grid distances to a source set, computed by Dijkstra on a lattice graph.
//
// neighborhood_order selects the stencil: 1 = axis neighbors, 2 = all offsets
// with |di| <= 1 (8 neighbors in 2D, 26 in 3D), 3 additionally includes
// knight-type offsets (2D only).  Larger stencils tighten the metric
// overshoot, whose worst case is the secant of half the largest angular gap
// between edge directions.
struct DistanceField {
  std::vector<double> value;     // +infinity where unreachable or unmasked
  std::size_t unreachable = 0;   // masked points no path reaches
};

DistanceField distance_field(const GridDomain& dom,
                             const std::vector<std::uint8_t>& source,
                             int neighborhood_order = 2);

// L(E1, E0): the largest distance from a point of E1 to the set E0.  Not
// symmetric in its arguments.  Returns +infinity if E1 meets an unreachable
// component.
double sup_distance(const GridDomain& dom, const std::vector<std::uint8_t>& e1,
                    const std::vector<std::uint8_t>& e0,
                    int neighborhood_order = 2);

// Space-time influence masks: slice(t) is true where dist(x, omega) < T - |t|
// (strictly).  One mask per requested time sample.
std::vector<std::vector<std::uint8_t>> region_of_dependence(
    const GridDomain& dom, const std::vector<std::uint8_t>& omega, double T,
    const std::vector<double>& t_samples, int neighborhood_order = 2);

}  // namespace carleman
