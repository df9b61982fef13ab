#pragma once

#include "cocyclelab/base_system.hpp"

#include <unordered_map>

namespace cocyclelab {

/// Spatial index over phase-space points: grid cells on the torus, cylinder
/// buckets on the shift. Bucket granularity is chosen so that every pair at
/// distance < beta falls in the same bucket (shift) or in adjacent cells
/// (torus); callers re-check exact distances. Iteration order is
/// deterministic.
class NeighborIndex {
 public:
  NeighborIndex(const BaseSystem& sys, double beta);

  void insert(int64_t id, const Point& p);
  void finalize();

  /// Candidate pairs (i < j), each unordered pair visited exactly once.
  void for_each_pair(const std::function<void(int64_t, int64_t)>& fn) const;

  /// Candidate ids near q.
  void candidates_near(const Point& q,
                       const std::function<void(int64_t)>& fn) const;

 private:
  int64_t key_of(const Point& p) const;

  const BaseSystem& sys_;
  double beta_;
  int64_t cells_ = 1;   // torus grid resolution
  int64_t depth_ = 0;   // shift cylinder half-width
  std::unordered_map<int64_t, std::vector<int64_t>> buckets_;
  std::vector<int64_t> keys_;
};

}  // namespace cocyclelab
