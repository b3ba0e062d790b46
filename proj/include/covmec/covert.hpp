// SPDX-License-Identifier: Apache-2.0
//
// Warden radiometer model: optimal threshold, minimum detection error
// probability (DEP) and a Monte Carlo check of both.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace covmec {

/// Expected warden received power without (lambda0) and with (lambda1) UAV
/// transmission, in W.
struct DetectionStats {
    double lambda0 = 1.0;
    double lambda1 = 1.0;

    double mu() const { return (lambda1 - lambda0) / lambda0; }
};

/// Below this relative excess the two hypotheses are treated as identical.
inline constexpr double kMuDegenerate = 1e-12;

/// F(mu) = mu (1+mu)^-(1+1/mu); the DEP constraint reads 1 - xi_min >= F(mu).
double F(double mu);
/// Inverse of F by bisection to 1e-10 absolute. F increases from 0 to 1 on
/// (0, inf). Throws InputError when y is outside (0, 1).
double F_inverse(double y);

/// Threshold minimising false alarm + missed detection, or nullopt when
/// mu <= kMuDegenerate.
std::optional<double> optimal_threshold(const DetectionStats& s);
/// Minimum DEP at the optimal threshold; 1 for mu <= kMuDegenerate.
double dep_min(const DetectionStats& s);
/// Same as dep_min as a function of mu alone.
double dep_min_mu(double mu);
/// DEP at an arbitrary threshold delta: exp(-delta/lambda0) + 1 - exp(-delta/lambda1).
double dep_at_threshold(const DetectionStats& s, double delta);

struct McDepResult {
    double dep = 1.0;         // empirical DEP at the analytic threshold
    double stderr_dep = 0.0;  // binomial standard error
    double best_grid_dep = 1.0;    // smallest empirical DEP over the threshold grid
    double best_grid_delta = 0.0;  // threshold attaining it
    std::int64_t samples = 0;
};

/// Monte Carlo radiometer: per hypothesis, `samples` single-sample received
/// powers |y|^2 drawn exponential with mean lambda0 / lambda1 from a
/// counter-based stream keyed by `seed`. Results do not depend on `workers`.
/// The threshold grid has `grid_points` points on [0, 4 lambda1].
McDepResult mc_dep_oracle(const DetectionStats& s, std::int64_t samples, std::uint64_t seed, int grid_points = 200,
                          int workers = 1);

/// Deterministic uniform in (0, 1) for (seed, stream, index).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace covmec
