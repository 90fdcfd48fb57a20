#pragma once

// FIFO queue of vehicle packets waiting to enter the network, and the
// admission rule that releases them under first-cell supply limits.

#include <Eigen/Core>

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>

#include "mixroute/ctm.hpp"

namespace mixroute {

template <typename Scalar>
struct Packet {
  Scalar human{0};
  Scalar autonomous{0};
};

template <typename Scalar>
class VehicleQueue {
 public:
  VehicleQueue() = default;

  void enqueue(Scalar human, Scalar autonomous) {
    if (human < 0 || autonomous < 0) throw std::invalid_argument("negative demand");
    if (human == 0 && autonomous == 0) return;
    packets_.push_back({human, autonomous});
  }

  FlowTuple<Scalar> totals() const {
    FlowTuple<Scalar> t;
    for (const auto& p : packets_) {
      t.human += p.human;
      t.autonomous += p.autonomous;
    }
    return t;
  }

  bool empty() const { return packets_.empty(); }
  std::size_t size() const { return packets_.size(); }
  const Packet<Scalar>& operator[](std::size_t j) const { return packets_[j]; }
  const std::deque<Packet<Scalar>>& packets() const { return packets_; }

  Packet<Scalar>& head() { return packets_.front(); }
  void pop() { packets_.pop_front(); }

 private:
  std::deque<Packet<Scalar>> packets_;
};

template <typename Scalar>
VehicleQueue<Scalar> enqueue_demand(VehicleQueue<Scalar> queue, Scalar human, Scalar autonomous) {
  queue.enqueue(human, autonomous);
  return queue;
}

template <typename Scalar>
FlowTuple<Scalar> queue_totals(const VehicleQueue<Scalar>& queue) {
  return queue.totals();
}

template <typename Scalar>
struct Admission {
  Vector<Scalar> human;       // per path
  Vector<Scalar> autonomous;  // per path

  Vector<Scalar> total() const { return human + autonomous; }
};

// Releases whole packets from the head of the queue while every path has room
// for its share (mu_h * q_h + mu_a * q_a). The first packet that does not fit
// is split: the largest fraction y in [0, 1] that keeps every loaded path
// within supply is admitted and the rest stays at the head.
//
// Only paths the head packet actually loads take part in the termination
// test and in the split; a path with zero routing mass never blocks the queue.
template <typename Scalar>
Admission<Scalar> disburse(VehicleQueue<Scalar>& queue, const Vector<Scalar>& supply,
                           const Vector<Scalar>& mu_human, const Vector<Scalar>& mu_auto) {
  const Eigen::Index paths = supply.size();
  if (mu_human.size() != paths || mu_auto.size() != paths)
    throw std::invalid_argument("routing vectors and supplies differ in length");
  Admission<Scalar> out{Vector<Scalar>::Zero(paths), Vector<Scalar>::Zero(paths)};

  while (!queue.empty()) {
    Packet<Scalar>& head = queue.head();
    const Vector<Scalar> load = mu_human * head.human + mu_auto * head.autonomous;
    const Vector<Scalar> used = out.total();

    bool saturated = false;
    bool fits = true;
    for (Eigen::Index p = 0; p < paths; ++p) {
      if (load(p) <= 0) continue;
      if (used(p) >= supply(p)) saturated = true;
      if (used(p) + load(p) > supply(p)) fits = false;
    }
    if (saturated) break;

    if (fits) {
      out.human += mu_human * head.human;
      out.autonomous += mu_auto * head.autonomous;
      queue.pop();
      continue;
    }

    Scalar y = 1;
    for (Eigen::Index p = 0; p < paths; ++p)
      if (load(p) > 0) y = std::min(y, (supply(p) - used(p)) / load(p));
    y = std::clamp(y, Scalar(0), Scalar(1));
    if (y > 0) {
      out.human += mu_human * (y * head.human);
      out.autonomous += mu_auto * (y * head.autonomous);
      head.human *= Scalar(1) - y;
      head.autonomous *= Scalar(1) - y;
    }
    break;
  }
  return out;
}

}  // namespace mixroute
