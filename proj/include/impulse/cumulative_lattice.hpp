#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "impulse/menu.hpp"

namespace impulse {

// All cumulative impulse sums reachable with at most max_depth menu items,
// deduplicated. Id 0 is the zero vector. child_of(v, j) is the id of
// value(v) + item_j, or -1 when that sum needs more than max_depth items.
class CumulativeLattice {
  public:
    static constexpr int kNoChild = -1;

    int size() const { return static_cast<int>(values_.size()); }
    int max_depth() const { return max_depth_; }
    const Vec& value(int id) const { return values_[id]; }
    int depth(int id) const { return depths_[id]; }
    int child_of(int id, int item) const { return arcs_[id * n_items_ + item]; }
    int items() const { return n_items_; }

    // Follows arcs from id 0; -1 if any hop leaves the lattice.
    int locate(const std::vector<int>& item_seq) const {
        int id = 0;
        for (int j : item_seq) {
            id = child_of(id, j);
            if (id < 0) return kNoChild;
        }
        return id;
    }

    friend CumulativeLattice build_cumulative_lattice(const ImpulseMenu&, int, std::size_t);

  private:
    int max_depth_ = 0;
    int n_items_ = 0;
    std::vector<Vec> values_;
    std::vector<int> depths_;  // minimal item count realising the value
    std::vector<int> arcs_;    // size() * n_items_
};

inline CumulativeLattice build_cumulative_lattice(const ImpulseMenu& menu, int max_depth,
                                                  std::size_t max_values = 200000) {
    require(max_depth >= 1, Errc::BadModel, "cumulative lattice needs depth >= 1");
    CumulativeLattice lat;
    lat.max_depth_ = max_depth;
    lat.n_items_ = menu.size();
    lat.values_.push_back(Vec(menu.dim, 0.0));
    lat.depths_.push_back(0);

    auto find = [&lat](const Vec& w) -> int {
        // exact match first, then a small tolerance to merge rounding twins
        for (int id = 0; id < lat.size(); ++id)
            if (lat.values_[id] == w) return id;
        for (int id = 0; id < lat.size(); ++id) {
            bool close = true;
            for (std::size_t c = 0; c < w.size() && close; ++c)
                close = std::abs(lat.values_[id][c] - w[c]) <= 1e-9 * (1.0 + std::abs(w[c]));
            if (close) return id;
        }
        return CumulativeLattice::kNoChild;
    };

    // breadth-first by depth so every value keeps its minimal depth
    std::vector<int> frontier{0};
    for (int depth = 1; depth <= max_depth; ++depth) {
        std::vector<int> next;
        for (int parent : frontier) {
            for (int j = 0; j < menu.size(); ++j) {
                Vec w = lat.values_[parent];
                for (int c = 0; c < menu.dim; ++c) w[c] += menu.items[j][c];
                int id = find(w);
                if (id == CumulativeLattice::kNoChild) {
                    require(lat.values_.size() < max_values, Errc::TooLarge,
                            "cumulative lattice exceeds the size cap");
                    id = lat.size();
                    lat.values_.push_back(std::move(w));
                    lat.depths_.push_back(depth);
                    next.push_back(id);
                }
            }
        }
        frontier = std::move(next);
    }

    lat.arcs_.assign(static_cast<std::size_t>(lat.size()) * menu.size(),
                     CumulativeLattice::kNoChild);
    for (int id = 0; id < lat.size(); ++id) {
        for (int j = 0; j < menu.size(); ++j) {
            Vec w = lat.values_[id];
            for (int c = 0; c < menu.dim; ++c) w[c] += menu.items[j][c];
            lat.arcs_[id * menu.size() + j] = find(w);
        }
    }
    return lat;
}

}  // namespace impulse
