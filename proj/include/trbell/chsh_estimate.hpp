#pragma once

#include <array>
#include <cstdint>

namespace trbell {

// Correlators estimated from sampled trials. Indices are [setting_a - 1][setting_b - 1].
struct CHSHEstimate {
    std::array<std::array<std::int64_t, 2>, 2> counts{};
    std::array<std::array<double, 2>, 2> correlators{};
    std::array<std::array<double, 2>, 2> stderrs{};
    double s = 0.0;
    double stderr_s = 0.0;

    std::int64_t count(int i, int j) const { return counts[i - 1][j - 1]; }
    double correlator(int i, int j) const { return correlators[i - 1][j - 1]; }
};

// Sufficient statistics for the four correlators: per setting pair the number of samples,
// and the sum and sum of squares of the per-trial values (products in {-1, 0, +1}).
// Integer-valued, so merging is exact and order-independent.
class CorrelationTally {
public:
    void add(int setting_a, int setting_b, int value) {
        Cell& c = cells_[setting_a - 1][setting_b - 1];
        ++c.count;
        c.sum += value;
        c.sum_sq += value * value;
    }

    void merge(const CorrelationTally& other) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                cells_[i][j].count += other.cells_[i][j].count;
                cells_[i][j].sum += other.cells_[i][j].sum;
                cells_[i][j].sum_sq += other.cells_[i][j].sum_sq;
            }
    }

    std::int64_t count(int i, int j) const { return cells_[i - 1][j - 1].count; }
    std::int64_t total() const {
        std::int64_t n = 0;
        for (const auto& row : cells_)
            for (const auto& c : row) n += c.count;
        return n;
    }

    // Mean per cell; standard error of each mean from the sample second moment
    // (the binomial (1 - E^2)/N for +-1 values), combined in quadrature for S.
    // Throws InsufficientData naming the first empty setting pair.
    CHSHEstimate estimate() const;

    bool operator==(const CorrelationTally&) const = default;

private:
    struct Cell {
        std::int64_t count = 0;
        std::int64_t sum = 0;
        std::int64_t sum_sq = 0;
        bool operator==(const Cell&) const = default;
    };
    std::array<std::array<Cell, 2>, 2> cells_{};
};

}  // namespace trbell
