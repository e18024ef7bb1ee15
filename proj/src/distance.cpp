#include "carleman/distance.hpp"

#include <cmath>
#include <limits>
#include <queue>

#include "carleman/util.hpp"

namespace carleman {

namespace {

std::vector<std::array<int, 3>> stencil(int dim, int order) {
  if (order < 1 || order > 3)
    throw Error(ErrorCode::config, "distance: neighborhood_order must be 1, 2 or 3");
  if (order == 3 && dim == 3)
    throw Error(ErrorCode::config, "distance: order-3 stencil is 2D only");
  std::vector<std::array<int, 3>> offs;
  const int lim = (order >= 3) ? 2 : 1;
  for (int a = -lim; a <= lim; ++a)
    for (int b = (dim >= 2 ? -lim : 0); b <= (dim >= 2 ? lim : 0); ++b)
      for (int c = (dim >= 3 ? -lim : 0); c <= (dim >= 3 ? lim : 0); ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const int m = std::max({std::abs(a), std::abs(b), std::abs(c)});
        const int s = std::abs(a) + std::abs(b) + std::abs(c);
        if (order == 1 && s > 1) continue;
        if (order == 2 && m > 1) continue;
        // Order 3: |di| <= 1 plus knight moves; skip (2,2) and scaled copies
        // of shorter directions like (2,0).
        if (order == 3 && m == 2 && s != 3) continue;
        offs.push_back({a, b, c});
      }
  return offs;
}

}  // namespace

DistanceField distance_field(const GridDomain& dom,
                             const std::vector<std::uint8_t>& source,
                             int neighborhood_order) {
  if (source.size() != dom.size())
    throw Error(ErrorCode::dimension, "distance_field: source mask size mismatch");
  const double inf = std::numeric_limits<double>::infinity();
  DistanceField out;
  out.value.assign(dom.size(), inf);

  using Item = std::pair<double, std::size_t>;  // (distance, node)
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;

  bool any_source = false;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (source[i] && dom.masked(i)) {
      out.value[i] = 0.0;
      heap.emplace(0.0, i);
      any_source = true;
    }
  }
  if (!any_source)
    throw Error(ErrorCode::domain, "distance_field: empty source set");

  const auto offs = stencil(dom.dim(), neighborhood_order);
  const auto& n = dom.counts();
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > out.value[u]) continue;  // stale entry
    const auto cu = dom.coords(u);
    const Eigen::VectorXd xu = dom.point(u);
    for (const auto& o : offs) {
      const int i = cu[0] + o[0], j = cu[1] + o[1], k = cu[2] + o[2];
      if (i < 0 || i >= n[0] || j < 0 || j >= n[1] || k < 0 || k >= n[2]) continue;
      const std::size_t v = dom.index(i, j, k);
      if (!dom.masked(v)) continue;
      const double w = dom.segment_length(xu, dom.point(v));
      if (out.value[u] + w < out.value[v]) {
        out.value[v] = out.value[u] + w;
        heap.emplace(out.value[v], v);
      }
    }
  }

  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.masked(i) && std::isinf(out.value[i])) ++out.unreachable;
  return out;
}

double sup_distance(const GridDomain& dom, const std::vector<std::uint8_t>& e1,
                    const std::vector<std::uint8_t>& e0, int neighborhood_order) {
  if (e1.size() != dom.size())
    throw Error(ErrorCode::dimension, "sup_distance: E1 mask size mismatch");
  const auto field = distance_field(dom, e0, neighborhood_order);
  double sup = -1.0;
  bool any = false;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!e1[i] || !dom.masked(i)) continue;
    any = true;
    sup = std::max(sup, field.value[i]);
  }
  if (!any) throw Error(ErrorCode::domain, "sup_distance: empty E1 set");
  return sup;
}

std::vector<std::vector<std::uint8_t>> region_of_dependence(
    const GridDomain& dom, const std::vector<std::uint8_t>& omega, double T,
    const std::vector<double>& t_samples, int neighborhood_order) {
  if (!(T > 0.0))
    throw Error(ErrorCode::config, "region_of_dependence: T must be positive");
  const auto field = distance_field(dom, omega, neighborhood_order);
  std::vector<std::vector<std::uint8_t>> slices;
  slices.reserve(t_samples.size());
  for (double t : t_samples) {
    const double reach = T - std::abs(t);
    std::vector<std::uint8_t> slice(dom.size(), 0);
    for (std::size_t i = 0; i < dom.size(); ++i)
      slice[i] = (dom.masked(i) && field.value[i] < reach) ? 1 : 0;
    slices.push_back(std::move(slice));
  }
  return slices;
}

}  // namespace carleman
