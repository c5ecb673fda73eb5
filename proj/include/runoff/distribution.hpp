#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "runoff/errors.hpp"

namespace runoff {

struct ReserveOutcome {
    double reserve = 0.0;
    double next_year_payments = 0.0;
    double ultimate = 0.0;
};

// Simulated joint outcomes of (reserve, next year's payments, ultimate).
class ReserveDistribution {
public:
    ReserveDistribution() = default;
    explicit ReserveDistribution(std::vector<ReserveOutcome> outcomes) : outcomes_(std::move(outcomes)) {
        if (outcomes_.empty()) throw ArgumentError("ReserveDistribution: no outcomes");
        sorted_reserves_.reserve(outcomes_.size());
        for (const auto& o : outcomes_) sorted_reserves_.push_back(o.reserve);
        std::sort(sorted_reserves_.begin(), sorted_reserves_.end());
    }

    std::size_t size() const { return outcomes_.size(); }
    const std::vector<ReserveOutcome>& outcomes() const { return outcomes_; }

    double mean_reserve() const { return mean(&ReserveOutcome::reserve); }
    double mean_next_year() const { return mean(&ReserveOutcome::next_year_payments); }
    double mean_ultimate() const { return mean(&ReserveOutcome::ultimate); }

    double sd_reserve() const {
        const double m = mean_reserve();
        double ss = 0.0;
        for (const auto& o : outcomes_) ss += (o.reserve - m) * (o.reserve - m);
        return outcomes_.size() > 1 ? std::sqrt(ss / (outcomes_.size() - 1)) : 0.0;
    }

    // Linear-interpolation quantile of the simulated reserves, q in [0, 1].
    double percentile_reserve(double q) const {
        if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("percentile_reserve: q outside [0,1]");
        const double pos = q * static_cast<double>(sorted_reserves_.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= sorted_reserves_.size()) return sorted_reserves_.back();
        const double w = pos - static_cast<double>(lo);
        return sorted_reserves_[lo] * (1.0 - w) + sorted_reserves_[lo + 1] * w;
    }

private:
    double mean(double ReserveOutcome::* field) const {
        double s = 0.0;
        for (const auto& o : outcomes_) s += o.*field;
        return s / static_cast<double>(outcomes_.size());
    }

    std::vector<ReserveOutcome> outcomes_;
    std::vector<double> sorted_reserves_;
};

}  // namespace runoff
