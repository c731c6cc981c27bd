#pragma once

#include <vector>

#include "impulse/common.hpp"

namespace impulse {

// Value (or obstacle) surface for one iteration level: per cumulative-impulse
// id, a (time x state) matrix. Entries are only materialised for the ids a
// level actually covers; absent ids hold an empty matrix.
struct LevelField {
    int level = 0;
    std::vector<Matrix> per_a;

    LevelField() = default;
    LevelField(int lvl, int n_a) : level(lvl), per_a(static_cast<std::size_t>(n_a)) {}

    bool has(int a_id) const {
        return a_id >= 0 && a_id < static_cast<int>(per_a.size()) && !per_a[a_id].empty();
    }
    Matrix& at(int a_id) { return per_a[a_id]; }
    const Matrix& at(int a_id) const { return per_a[a_id]; }
};

using ValueField = LevelField;
using ObstacleField = LevelField;

}  // namespace impulse
