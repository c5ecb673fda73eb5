#pragma once

#include <string>
#include <vector>

#include "runoff/errors.hpp"
#include "runoff/triangle.hpp"

namespace runoff {

// Development factors lambda[j] for lag j-1 -> j, 1-based, with the
// lambda[1] = 1 convention (no factor exists into the first lag).
struct DevFactors {
    std::vector<double> lambda;

    int n() const { return static_cast<int>(lambda.size()); }
    double at(int j) const { return lambda[static_cast<std::size_t>(j - 1)]; }
};

// All-available-pairs estimator: ratio of column sums over the rows observed
// at both lags.
inline DevFactors dev_factors(const LossTriangle& tri) {
    if (tri.kind() != Kind::cumulative)
        throw StructuralError("dev_factors: expects a cumulative triangle");
    const int n = tri.n();
    DevFactors out;
    out.lambda.assign(static_cast<std::size_t>(n), 1.0);
    for (int j = 2; j <= n; ++j) {
        double num = 0.0, den = 0.0;
        for (int i = 1; i + j <= n + 1; ++i) {
            num += tri.at(i, j);
            den += tri.at(i, j - 1);
        }
        if (den == 0.0)
            throw DegenerateColumnError("dev_factors: zero denominator at development lag " + std::to_string(j));
        out.lambda[static_cast<std::size_t>(j - 1)] = num / den;
    }
    return out;
}

// Completes the rectangle: each lower cell is the row's diagonal value
// developed by the product of factors. Observed cells are copied unchanged.
inline SquareGrid project(const LossTriangle& tri, const DevFactors& factors) {
    if (tri.kind() != Kind::cumulative)
        throw StructuralError("project: expects a cumulative triangle");
    const int n = tri.n();
    if (factors.n() < n) throw ArgumentError("project: factors cover fewer lags than the triangle");
    SquareGrid full(n);
    for (int i = 1; i <= n; ++i) {
        const int lag = tri.last_lag(i);
        for (int j = 1; j <= lag; ++j) full.at(i, j) = tri.at(i, j);
        double value = tri.at(i, lag);
        for (int j = lag + 1; j <= n; ++j) {
            value *= factors.at(j);
            full.at(i, j) = value;
        }
    }
    return full;
}

inline double reserve_from_rectangle(const SquareGrid& full, const LossTriangle& tri) {
    const int n = full.n();
    double reserve = 0.0;
    for (int i = 1; i <= n; ++i) reserve += full.at(i, n) - tri.at(i, tri.last_lag(i));
    return reserve;
}

// Chain Ladder reserve of the observed triangle (deterministic central value).
inline double chain_ladder_reserve(const LossTriangle& tri) {
    return reserve_from_rectangle(project(tri, dev_factors(tri)), tri);
}

}  // namespace runoff
