#include "freebloom/core/schedule.hpp"

#include "freebloom/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace freebloom {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.size() < 2) {
        throw InvalidArgument("noise schedule needs at least 2 steps");
    }
    alpha_bars_.reserve(betas_.size());
    double product = 1.0;
    for (double beta : betas_) {
        if (!(beta > 0.0 && beta < 1.0)) {
            throw InvalidArgument("betas must lie in (0, 1), got " + std::to_string(beta));
        }
        product *= 1.0 - beta;
        alpha_bars_.push_back(product);
    }
}

void NoiseSchedule::check_index(int t, int lowest) const {
    if (t < lowest || t > steps()) {
        throw InvalidArgument("timestep " + std::to_string(t) + " outside [" + std::to_string(lowest) +
                              ", " + std::to_string(steps()) + "]");
    }
}

double NoiseSchedule::beta(int t) const {
    check_index(t, 1);
    return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha(int t) const { return 1.0 - beta(t); }

double NoiseSchedule::alpha_bar(int t) const {
    check_index(t, 0);
    return t == 0 ? 1.0 : alpha_bars_[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule linear_schedule(int T, double beta_start, double beta_end) {
    if (T < 2) {
        throw InvalidArgument("linear_schedule: T must be >= 2");
    }
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw InvalidArgument("linear_schedule: need 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> betas(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(T - 1);
        betas[static_cast<std::size_t>(i)] = beta_start + frac * (beta_end - beta_start);
    }
    return NoiseSchedule(std::move(betas));
}

NoiseSchedule default_schedule() { return linear_schedule(1000, 1e-4, 0.02); }

std::vector<int> inference_timesteps(const NoiseSchedule& schedule, int steps) {
    const int T = schedule.steps();
    if (steps < 1 || steps > T) {
        throw InvalidArgument("inference steps must lie in [1, " + std::to_string(T) + "]");
    }
    std::vector<int> grid;
    grid.reserve(static_cast<std::size_t>(steps));
    for (int k = steps; k >= 1; --k) {
        grid.push_back(static_cast<int>((static_cast<long long>(k) * T) / steps));
    }
    return grid;
}

int threshold_for_fraction(const std::vector<int>& grid, double fraction) {
    if (grid.empty()) {
        throw InvalidArgument("threshold_for_fraction: empty grid");
    }
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidArgument("threshold fraction must lie in (0, 1]");
    }
    auto count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(grid.size())));
    count = std::max<std::size_t>(count, 1);
    return grid[count - 1];
}

} // namespace freebloom
