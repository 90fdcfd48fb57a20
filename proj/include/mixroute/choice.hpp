#pragma once

// Hedge (exponential weights) route choice for the human population.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixroute/ctm.hpp"

namespace mixroute {

enum class ScheduleKind { constant, inverse_sqrt };

template <typename Scalar>
struct LearningSchedule {
  ScheduleKind kind{ScheduleKind::constant};
  Scalar eta0{Scalar(0.1)};
};

template <typename Scalar>
Scalar learning_rate(const LearningSchedule<Scalar>& schedule, long k) {
  if (k < 0) throw std::invalid_argument("time index must be nonnegative");
  if (schedule.kind == ScheduleKind::inverse_sqrt) return schedule.eta0 / std::sqrt(Scalar(k + 1));
  return schedule.eta0;
}

template <typename Scalar>
Vector<Scalar> uniform_routing(Eigen::Index paths) {
  return Vector<Scalar>::Constant(paths, Scalar(1) / Scalar(paths));
}

// Projects a nonnegative vector onto the simplex by rescaling. Throws when the
// vector is not a usable routing (negative entries, wrong length, zero mass,
// or a sum further than `tolerance` from one).
template <typename Scalar>
Vector<Scalar> normalize_routing(const Vector<Scalar>& mu, Scalar tolerance) {
  if (mu.size() == 0) throw std::invalid_argument("empty routing vector");
  if (!mu.allFinite() || (mu.array() < 0).any()) throw std::invalid_argument("routing vector has negative entries");
  const Scalar sum = mu.sum();
  if (!(sum > 0)) throw std::invalid_argument("routing vector has no mass");
  if (std::abs(sum - Scalar(1)) > tolerance) throw std::invalid_argument("routing vector is off the simplex");
  return mu / sum;
}

// mu'_p = mu_p exp(-eta l_p) / sum_q mu_q exp(-eta l_q), with the smallest
// latency among supported paths subtracted inside the exponent. Positive
// entries are floored at the smallest normal number so a path never leaves
// the support through underflow.
template <typename Scalar>
Vector<Scalar> hedge_update(const Vector<Scalar>& mu, const Vector<Scalar>& latency, Scalar eta) {
  if (mu.size() != latency.size()) throw std::invalid_argument("routing and latency lengths differ");
  if (eta < 0) throw std::invalid_argument("learning rate must be nonnegative");
  if (!(mu.sum() > 0)) throw std::invalid_argument("routing vector has no mass");
  if (!latency.allFinite()) throw std::invalid_argument("latencies must be finite");

  Scalar shift = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index p = 0; p < mu.size(); ++p)
    if (mu(p) > 0) shift = std::min(shift, latency(p));
  Vector<Scalar> weights = Vector<Scalar>::Zero(mu.size());
  for (Eigen::Index p = 0; p < mu.size(); ++p)
    if (mu(p) > 0) weights(p) = mu(p) * std::exp(-eta * (latency(p) - shift));
  weights /= weights.sum();
  const Scalar floor = std::numeric_limits<Scalar>::min();
  for (Eigen::Index p = 0; p < weights.size(); ++p)
    if (mu(p) > 0 && weights(p) < floor) weights(p) = floor;
  return weights / weights.sum();
}

}  // namespace mixroute
