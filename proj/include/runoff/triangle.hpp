#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "runoff/errors.hpp"

namespace runoff {

enum class Kind { cumulative, incremental };

enum class Split { train, test, lower };

enum class Line { CA, PA, WC, OL };

inline const char* line_name(Line line) {
    switch (line) {
        case Line::CA: return "CA";
        case Line::PA: return "PA";
        case Line::WC: return "WC";
        case Line::OL: return "OL";
    }
    return "?";
}

inline Line parse_line(const std::string& s) {
    if (s == "CA") return Line::CA;
    if (s == "PA") return Line::PA;
    if (s == "WC") return Line::WC;
    if (s == "OL") return Line::OL;
    throw ArgumentError("unknown line of business: " + s);
}

inline const std::vector<Line>& all_lines() {
    static const std::vector<Line> lines{Line::CA, Line::PA, Line::WC, Line::OL};
    return lines;
}

// Square n x n grid with 1-based (accident year, development lag) indexing.
class SquareGrid {
public:
    SquareGrid() = default;
    explicit SquareGrid(int n, double fill = 0.0) : n_(n), cells_(static_cast<std::size_t>(n) * n, fill) {
        if (n < 1) throw StructuralError("SquareGrid: side must be >= 1");
    }

    int n() const { return n_; }

    double at(int i, int j) const { return cells_[offset(i, j)]; }
    double& at(int i, int j) { return cells_[offset(i, j)]; }

    bool operator==(const SquareGrid& other) const = default;

    const std::vector<double>& raw() const { return cells_; }

private:
    std::size_t offset(int i, int j) const {
        if (i < 1 || i > n_ || j < 1 || j > n_)
            throw StructuralError("SquareGrid: index (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") outside " + std::to_string(n_) + "x" + std::to_string(n_));
        return static_cast<std::size_t>(i - 1) * n_ + (j - 1);
    }

    int n_ = 0;
    std::vector<double> cells_;
};

// Run-off triangle: upper cells (i + j <= n + 1) are observed, the rest are
// padding. Values are immutable after construction.
class LossTriangle {
public:
    LossTriangle(SquareGrid cells, Kind kind) : cells_(std::move(cells)), kind_(kind) {
        if (cells_.n() < 2) throw StructuralError("LossTriangle: need n >= 2");
    }

    int n() const { return cells_.n(); }
    Kind kind() const { return kind_; }
    const SquareGrid& cells() const { return cells_; }
    double at(int i, int j) const { return cells_.at(i, j); }
    bool observed(int i, int j) const { return i + j <= n() + 1; }

    // Development lag of row i's diagonal cell.
    int last_lag(int i) const { return n() - i + 1; }

private:
    SquareGrid cells_;
    Kind kind_;
};

// Re-sums into a fresh grid; converting back restores the input exactly for
// monetary (integer-valued) cells.
inline LossTriangle convert(const LossTriangle& tri, Kind to) {
    if (tri.kind() == to) return tri;
    const int n = tri.n();
    SquareGrid out(n);
    for (int i = 1; i <= n; ++i) {
        if (to == Kind::cumulative) {
            double acc = 0.0;
            for (int j = 1; j <= tri.last_lag(i); ++j) {
                acc = 0.0;
                for (int k = 1; k <= j; ++k) acc += tri.at(i, k);
                out.at(i, j) = acc;
            }
        } else {
            for (int j = 1; j <= tri.last_lag(i); ++j)
                out.at(i, j) = j == 1 ? tri.at(i, 1) : tri.at(i, j) - tri.at(i, j - 1);
        }
    }
    return LossTriangle(std::move(out), to);
}

// One insurer and line of business. The full rectangle keeps the holdout
// truth below the diagonal; premiums are the exposure measure.
struct CompanyDataset {
    std::string group_id;
    Line line = Line::CA;
    SquareGrid rectangle;  // cumulative paid, full n x n
    std::vector<double> premiums;
    int calendar_origin = 1988;

    int n() const { return rectangle.n(); }
    int last_lag(int i) const { return n() - i + 1; }

    void validate() const {
        const int size = n();
        if (size < 2) throw StructuralError("CompanyDataset: need n >= 2");
        if (static_cast<int>(premiums.size()) != size)
            throw StructuralError("CompanyDataset " + group_id + ": premium vector length " +
                                  std::to_string(premiums.size()) + " != n=" + std::to_string(size));
        for (int i = 1; i <= size; ++i) {
            if (!(premiums[i - 1] > 0.0))
                throw ExposureError("CompanyDataset " + group_id + ": non-positive premium for accident year " +
                                    std::to_string(i));
        }
        for (int i = 1; i <= size; ++i)
            for (int j = 1; j <= size; ++j)
                if (rectangle.at(i, j) < 0.0)
                    throw StructuralError("CompanyDataset " + group_id + ": negative cumulative cell (" +
                                          std::to_string(i) + "," + std::to_string(j) + ")");
    }

    // Observed upper triangle as a LossTriangle (lower cells zeroed).
    LossTriangle observed_triangle() const {
        SquareGrid upper(n());
        for (int i = 1; i <= n(); ++i)
            for (int j = 1; j <= last_lag(i); ++j) upper.at(i, j) = rectangle.at(i, j);
        return LossTriangle(std::move(upper), Kind::cumulative);
    }

    double paid_to_date() const {
        double total = 0.0;
        for (int i = 1; i <= n(); ++i) total += rectangle.at(i, last_lag(i));
        return total;
    }
};

inline double ay_star(int i, int n) { return static_cast<double>(i - 1) / (n - 1); }
inline double dy_star(int j, int n) { return static_cast<double>(j - 1) / (n - 1); }

struct CellFeatures {
    int i = 0;
    int j = 0;
    double ay_star = 0.0;
    double dy_star = 0.0;
    double d_star = 0.0;  // cumulative paid / premium
    Split split = Split::train;
};

// Scaled features for the observed upper triangle, row-major. The last
// diagonal (i + j = n + 1) is the test set.
inline std::vector<CellFeatures> build_features(const CompanyDataset& ds) {
    ds.validate();
    const int n = ds.n();
    std::vector<CellFeatures> cells;
    cells.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= ds.last_lag(i); ++j) {
            CellFeatures c;
            c.i = i;
            c.j = j;
            c.ay_star = ay_star(i, n);
            c.dy_star = dy_star(j, n);
            c.d_star = ds.rectangle.at(i, j) / ds.premiums[i - 1];
            c.split = (i + j == n + 1) ? Split::test : Split::train;
            cells.push_back(c);
        }
    }
    return cells;
}

struct Actuals {
    double reserve = 0.0;
    double next_year_payments = 0.0;
    double ultimate = 0.0;
};

// Ground truth from the full rectangle: outstanding payments past the
// diagonal, next calendar year's payments, and the ultimate cost.
inline Actuals compute_actuals(const CompanyDataset& ds) {
    const int n = ds.n();
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (!std::isfinite(ds.rectangle.at(i, j)))
                throw IncompleteDataError("CompanyDataset " + ds.group_id + ": missing cell (" +
                                          std::to_string(i) + "," + std::to_string(j) + ")");
    Actuals out;
    for (int i = 1; i <= n; ++i) {
        const int lag = ds.last_lag(i);
        out.reserve += ds.rectangle.at(i, n) - ds.rectangle.at(i, lag);
        out.ultimate += ds.rectangle.at(i, n);
        if (lag < n) out.next_year_payments += ds.rectangle.at(i, lag + 1) - ds.rectangle.at(i, lag);
    }
    return out;
}

}  // namespace runoff
