#pragma once

#include <cmath>
#include <vector>

#include "loopshaper/errors.hpp"

namespace loopshaper {

// Strictly increasing positive angular frequencies (rad/s). Omega = 0 is
// excluded so integrator-augmented responses stay finite on the grid.
struct FrequencyGrid {
    std::vector<double> omegas;

    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> w) : omegas(std::move(w)) {
        if (omegas.empty()) throw EmptyGrid("FrequencyGrid: empty");
        double prev = 0.0;
        for (double x : omegas) {
            if (!(x > prev) || !std::isfinite(x)) throw OutOfRange("FrequencyGrid: entries must be positive, finite, strictly increasing");
            prev = x;
        }
    }

    std::size_t size() const { return omegas.size(); }
    double operator[](std::size_t i) const { return omegas[i]; }
    auto begin() const { return omegas.begin(); }
    auto end() const { return omegas.end(); }
};

// Logarithmically spaced grid, endpoints included.
inline FrequencyGrid make_grid(double omega_lo, double omega_hi, std::size_t count) {
    if (!(omega_lo > 0.0) || !(omega_hi > omega_lo) || count < 2)
        throw OutOfRange("make_grid: need 0 < lo < hi and count >= 2");
    std::vector<double> w(count);
    const double llo = std::log10(omega_lo), lhi = std::log10(omega_hi);
    for (std::size_t i = 0; i < count; ++i)
        w[i] = std::pow(10.0, llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(count - 1));
    w.front() = omega_lo;
    w.back() = omega_hi;
    return FrequencyGrid(std::move(w));
}

}  // namespace loopshaper
