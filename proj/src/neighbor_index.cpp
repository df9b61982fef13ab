#include "cocyclelab/neighbor_index.hpp"

#include <algorithm>
#include <cmath>

namespace cocyclelab {

NeighborIndex::NeighborIndex(const BaseSystem& sys, double beta)
    : sys_(sys), beta_(beta) {
  require(beta > 0, ErrorCode::kInvalidArgument, "beta must be positive");
  if (sys.is_torus()) {
    cells_ = std::max<int64_t>(1, static_cast<int64_t>(std::floor(1.0 / beta)));
    cells_ = std::min<int64_t>(cells_, 4096);
  } else {
    depth_ = 0;
    while (std::ldexp(1.0, -(static_cast<int>(depth_) + 1)) >= beta && depth_ < 30)
      ++depth_;
    // d < beta implies agreement on |n| <= depth_, i.e. same bucket
  }
}

void NeighborIndex::insert(int64_t id, const Point& p) {
  buckets_[key_of(p)].push_back(id);
}

void NeighborIndex::finalize() {
  keys_.clear();
  for (auto& [k, v] : buckets_) {
    std::sort(v.begin(), v.end());
    keys_.push_back(k);
  }
  std::sort(keys_.begin(), keys_.end());
}

int64_t NeighborIndex::key_of(const Point& p) const {
  if (sys_.is_torus()) {
    const auto& t = std::get<TorusPoint>(p);
    int64_t cx = std::min<int64_t>(
        static_cast<int64_t>(t[0] * static_cast<double>(cells_)), cells_ - 1);
    int64_t cy = std::min<int64_t>(
        static_cast<int64_t>(t[1] * static_cast<double>(cells_)), cells_ - 1);
    return cx * cells_ + cy;
  }
  const auto& s = std::get<SymbolSequence>(p);
  int64_t code = 0;
  for (int64_t n = -depth_; n <= depth_; ++n)
    code = code * s.alphabet() + s.symbol_at(n);
  return code;
}

void NeighborIndex::for_each_pair(
    const std::function<void(int64_t, int64_t)>& fn) const {
  if (sys_.is_torus() && cells_ >= 3) {
    // in-cell pairs plus a half neighborhood: each adjacent cell pair once
    static const int off[5][2] = {{0, 0}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
    for (int64_t key : keys_) {
      const auto& here = buckets_.at(key);
      int64_t cx = key / cells_, cy = key % cells_;
      for (const auto& d : off) {
        if (d[0] == 0 && d[1] == 0) {
          for (size_t a = 0; a < here.size(); ++a)
            for (size_t b = a + 1; b < here.size(); ++b) fn(here[a], here[b]);
          continue;
        }
        int64_t nx = (cx + d[0] + cells_) % cells_;
        int64_t ny = (cy + d[1] + cells_) % cells_;
        auto it = buckets_.find(nx * cells_ + ny);
        if (it == buckets_.end()) continue;
        for (int64_t a : here)
          for (int64_t b : it->second)
            if (a != b) fn(std::min(a, b), std::max(a, b));
      }
    }
    return;
  }
  if (sys_.is_torus()) {
    // coarse grid: brute force
    std::vector<int64_t> all;
    for (int64_t key : keys_) {
      const auto& v = buckets_.at(key);
      all.insert(all.end(), v.begin(), v.end());
    }
    std::sort(all.begin(), all.end());
    for (size_t a = 0; a < all.size(); ++a)
      for (size_t b = a + 1; b < all.size(); ++b) fn(all[a], all[b]);
    return;
  }
  for (int64_t key : keys_) {
    const auto& here = buckets_.at(key);
    for (size_t a = 0; a < here.size(); ++a)
      for (size_t b = a + 1; b < here.size(); ++b) fn(here[a], here[b]);
  }
}

void NeighborIndex::candidates_near(
    const Point& q, const std::function<void(int64_t)>& fn) const {
  if (sys_.is_torus()) {
    if (cells_ < 3) {
      for (int64_t key : keys_)
        for (int64_t i : buckets_.at(key)) fn(i);
      return;
    }
    int64_t key = key_of(q);
    int64_t cx = key / cells_, cy = key % cells_;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) {
        int64_t nx = (cx + dx + cells_) % cells_;
        int64_t ny = (cy + dy + cells_) % cells_;
        auto it = buckets_.find(nx * cells_ + ny);
        if (it == buckets_.end()) continue;
        for (int64_t i : it->second) fn(i);
      }
    return;
  }
  auto it = buckets_.find(key_of(q));
  if (it == buckets_.end()) return;
  for (int64_t i : it->second) fn(i);
}

}  // namespace cocyclelab
