// SPDX-License-Identifier: Apache-2.0
#include "covmec/covert.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "covmec/errors.hpp"

namespace covmec {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// ln(1+mu)/mu, continuous at 0.
double log1p_over(double mu) { return mu < 1e-8 ? 1.0 - mu / 2.0 : std::log1p(mu) / mu; }

}  // namespace

double F(double mu) {
    if (!(mu > 0.0)) return 0.0;
    if (std::isinf(mu)) return 1.0;
    return std::exp(std::log(mu) - std::log1p(mu) - log1p_over(mu));
}

double F_inverse(double y) {
    if (!(y > 0.0 && y < 1.0)) throw InputError("F_inverse: argument must lie in (0, 1)");
    double lo = 0.0, hi = 1.0;
    while (F(hi) < y) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw InputError("F_inverse: argument too close to 1");
    }
    while (hi - lo > 1e-10 * std::max(1.0, lo)) {
        const double mid = 0.5 * (lo + hi);
        (F(mid) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<double> optimal_threshold(const DetectionStats& s) {
    const double mu = s.mu();
    if (!(mu > kMuDegenerate)) return std::nullopt;
    return s.lambda0 * (1.0 + mu) * log1p_over(mu);
}

double dep_min_mu(double mu) {
    if (!(mu > kMuDegenerate)) return 1.0;
    const double r = log1p_over(mu);
    // 1 + exp(-(1+mu)/mu ln(1+mu)) - exp(-ln(1+mu)/mu)
    return 1.0 + std::exp(-(1.0 + mu) * r) - std::exp(-r);
}

double dep_min(const DetectionStats& s) { return dep_min_mu(s.mu()); }

double dep_at_threshold(const DetectionStats& s, double delta) {
    return std::exp(-delta / s.lambda0) + 1.0 - std::exp(-delta / s.lambda1);
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const std::uint64_t x = splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

McDepResult mc_dep_oracle(const DetectionStats& s, std::int64_t samples, std::uint64_t seed, int grid_points,
                          int workers) {
    if (samples < 1) throw InputError("mc_dep_oracle: samples must be >= 1");
    if (!(s.lambda0 > 0.0 && s.lambda1 > 0.0)) throw InputError("mc_dep_oracle: powers must be positive");
    grid_points = std::max(grid_points, 2);
    workers = std::max(1, workers);

    const auto thr = optimal_threshold(s);
    const double delta_star = thr.value_or(0.0);
    const double grid_max = 4.0 * std::max(s.lambda0, s.lambda1);
    const double grid_step = grid_max / (grid_points - 1);

    // hist[h][i] counts samples of hypothesis h in grid cell i, where cell i
    // holds x in [i*step, (i+1)*step); the last cell is open to the right.
    struct Counts {
        std::int64_t fa = 0, md = 0;
        std::vector<std::int64_t> hist0, hist1;
    };
    std::vector<Counts> part(workers);
    auto run = [&](int w) {
        Counts& c = part[w];
        c.hist0.assign(grid_points, 0);
        c.hist1.assign(grid_points, 0);
        const std::int64_t begin = samples * w / workers;
        const std::int64_t end = samples * (w + 1) / workers;
        for (std::int64_t i = begin; i < end; ++i) {
            const double x0 = -s.lambda0 * std::log(counter_uniform(seed, 0, static_cast<std::uint64_t>(i)));
            const double x1 = -s.lambda1 * std::log(counter_uniform(seed, 1, static_cast<std::uint64_t>(i)));
            if (thr) {
                c.fa += x0 > delta_star;
                c.md += x1 <= delta_star;
            }
            c.hist0[std::min<std::int64_t>(grid_points - 1, static_cast<std::int64_t>(x0 / grid_step))]++;
            c.hist1[std::min<std::int64_t>(grid_points - 1, static_cast<std::int64_t>(x1 / grid_step))]++;
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }

    Counts total;
    total.hist0.assign(grid_points, 0);
    total.hist1.assign(grid_points, 0);
    for (const auto& c : part) {
        total.fa += c.fa;
        total.md += c.md;
        for (int i = 0; i < grid_points; ++i) {
            total.hist0[i] += c.hist0[i];
            total.hist1[i] += c.hist1[i];
        }
    }

    McDepResult r;
    r.samples = samples;
    const double n = static_cast<double>(samples);
    if (thr) {
        const double p0 = total.fa / n, p1 = total.md / n;
        r.dep = p0 + p1;
        r.stderr_dep = std::sqrt(p0 * (1.0 - p0) / n + p1 * (1.0 - p1) / n);
    } else {
        // Identical hypotheses: any threshold gives DEP 1 in expectation; the
        // empirical value at delta = lambda0 is reported.
        std::int64_t fa = 0, md = 0;
        for (std::int64_t i = 0; i < samples; ++i) {
            fa += -s.lambda0 * std::log(counter_uniform(seed, 0, static_cast<std::uint64_t>(i))) > s.lambda0;
            md += -s.lambda1 * std::log(counter_uniform(seed, 1, static_cast<std::uint64_t>(i))) <= s.lambda0;
        }
        const double p0 = fa / n, p1 = md / n;
        r.dep = p0 + p1;
        r.stderr_dep = std::sqrt(p0 * (1.0 - p0) / n + p1 * (1.0 - p1) / n);
    }

    // Threshold at grid node i: false alarms are samples in cells >= i, misses in cells < i.
    std::int64_t below1 = 0;
    std::int64_t above0 = samples;
    r.best_grid_dep = 2.0;
    for (int i = 0; i < grid_points; ++i) {
        const double dep = (above0 + below1) / n;
        if (dep < r.best_grid_dep) {
            r.best_grid_dep = dep;
            r.best_grid_delta = i * grid_step;
        }
        above0 -= total.hist0[i];
        below1 += total.hist1[i];
    }
    return r;
}

}  // namespace covmec
