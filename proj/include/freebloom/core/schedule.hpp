#pragma once

#include <vector>

namespace freebloom {

/// Discrete noise schedule indexed t = 1..T, t = T being the noisiest step.
/// alpha_bar(0) is defined as 1 so the last reverse step can land on clean data.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> betas);

    int steps() const noexcept { return static_cast<int>(betas_.size()); }

    double beta(int t) const;
    double alpha(int t) const;
    double alpha_bar(int t) const;  // valid for 0..T

    const std::vector<double>& betas() const noexcept { return betas_; }
    const std::vector<double>& alpha_bars() const noexcept { return alpha_bars_; }

private:
    void check_index(int t, int lowest) const;

    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
};

NoiseSchedule linear_schedule(int T, double beta_start, double beta_end);

/// Default train grid: linear 1e-4 -> 0.02 over 1000 steps.
NoiseSchedule default_schedule();

/// Evenly strided descending subsequence t_k = floor(k*T/steps), k = steps..1.
/// The terminal step (t = 0, clean data) is implicit and not included.
std::vector<int> inference_timesteps(const NoiseSchedule& schedule, int steps);

/// Timestep threshold such that the first round(fraction * steps) entries of
/// the grid satisfy t >= threshold. Used for both tau (attention shift) and
/// tau* (interpolation m(t)); fraction must lie in (0, 1].
int threshold_for_fraction(const std::vector<int>& grid, double fraction);

} // namespace freebloom
