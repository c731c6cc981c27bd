#pragma once

#include <vector>

#include "impulse/common.hpp"

namespace impulse {

using Vec = std::vector<double>;

// Finite catalogue of intervention sizes. The item order is fixed and doubles
// as the tie-breaking order wherever several items achieve the same value.
struct ImpulseMenu {
    int dim = 0;                  // state dimension
    std::vector<Vec> items;      // p vectors in R^dim
    std::vector<double> costs;   // psi(a_j) >= 0 per item

    int size() const { return static_cast<int>(items.size()); }
    double min_cost() const {
        double m = costs.empty() ? 0.0 : costs[0];
        for (double c : costs)
            if (c < m) m = c;
        return m;
    }
    double max_cost() const {
        double m = 0.0;
        for (double c : costs)
            if (c > m) m = c;
        return m;
    }
};

inline ImpulseMenu make_menu(std::vector<Vec> items, std::vector<double> costs) {
    require(!items.empty(), Errc::BadModel, "menu needs at least one item");
    require(items.size() == costs.size(), Errc::BadModel, "one cost per menu item");
    const int dim = static_cast<int>(items[0].size());
    for (const auto& it : items)
        require(static_cast<int>(it.size()) == dim, Errc::BadModel, "menu items of mixed dimension");
    for (double c : costs)
        require(c >= 0.0, Errc::BadModel, "impulse costs must be nonnegative");
    for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t j = i + 1; j < items.size(); ++j)
            require(items[i] != items[j], Errc::DistinctItems, "menu items must be pairwise distinct");
    ImpulseMenu m;
    m.dim = dim;
    m.items = std::move(items);
    m.costs = std::move(costs);
    return m;
}

}  // namespace impulse
