#pragma once

// Episode time series as CSV: one row per tick k = 1..K with
//   k, J, proxy, Qh, Qa, lat_p..., mu_h_p..., mu_a_p... [, nh_p_i..., na_p_i...]
// mu_h and mu_a are the routings used during tick k; everything else is the
// state after it. Numbers are printed with 17 significant digits so the
// file parses back to the same doubles.

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "mixroute/env.hpp"
#include "mixroute/policies.hpp"

namespace mixroute {

EpisodeSummary write_episode_csv(std::ostream& out, Environment& env, Policy& policy,
                                 std::optional<std::uint64_t> seed = std::nullopt, bool densities = false);

}  // namespace mixroute
