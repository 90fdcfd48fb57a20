#pragma once

#include <mixroute/ctm.hpp>
#include <mixroute/equilibrium.hpp>

namespace fixtures {

// I = 5, m_n = 3, b_n = 2, b_b = 1, v = 1, h_h = 1, h_a = 0.5, n_jam = 8.
inline mixroute::PathSpec<double> canonical_path() {
  return mixroute::PathSpec<double>::single_bottleneck(5, 3, 2, 1, 1.0, 1.0, 0.5, 8.0);
}

// Canonical path followed by a copy stretched to 10 cells.
inline mixroute::NetworkSpec<double> desk_network() {
  return {{canonical_path(), mixroute::PathSpec<double>::single_bottleneck(10, 8, 2, 1, 1.0, 1.0, 0.5, 8.0)}};
}

}  // namespace fixtures
