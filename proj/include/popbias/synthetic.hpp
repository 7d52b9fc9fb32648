#pragma once

// Seeded generator of explicit-feedback data with a long-tailed item
// popularity, heavy-tailed user activity, and latent taste structure. Used
// for fixtures and for exercising the pipeline without a real dataset.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "popbias/data.hpp"
#include "popbias/random.hpp"

namespace popbias {

struct SyntheticOptions {
    std::size_t users = 200;
    std::size_t items = 300;
    /// Median number of ratings per user above `min_profile`.
    double activity_median = 40.0;
    double activity_sigma = 1.0;
    std::size_t min_profile = 20;
    /// Spread of log item popularity.
    double popularity_sigma = 1.6;
    std::size_t latent_dims = 8;
    /// Weight of taste affinity relative to popularity when choosing items.
    double taste_weight = 1.0;
    double rating_noise = 0.8;
    std::uint64_t seed = 1;
};

inline std::vector<Rating> generate_ratings(const SyntheticOptions& opt) {
    Rng rng(opt.seed);
    const std::size_t d = opt.latent_dims;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<double> log_pop(opt.items), quality(opt.items), item_vec(opt.items * d);
    for (std::size_t i = 0; i < opt.items; ++i) {
        const double z = rng.normal();
        log_pop[i] = opt.popularity_sigma * z;
        quality[i] = 0.3 * rng.normal() + 0.15 * z;
        for (std::size_t f = 0; f < d; ++f) item_vec[i * d + f] = rng.normal() * inv_sqrt_d;
    }

    std::vector<Rating> out;
    std::vector<double> user_vec(d);
    std::vector<std::pair<double, std::size_t>> keys(opt.items);
    std::int64_t clock = 1'000'000'000;
    for (std::size_t u = 0; u < opt.users; ++u) {
        const double extra = opt.activity_median * std::exp(opt.activity_sigma * rng.normal());
        const std::size_t cap = std::max<std::size_t>(opt.min_profile, opt.items / 2);
        const std::size_t n_u = std::min(cap, opt.min_profile + static_cast<std::size_t>(extra));
        const double mainstream = rng.uniform(0.5, 1.2);
        const double user_bias = 0.4 * rng.normal();
        for (std::size_t f = 0; f < d; ++f) user_vec[f] = rng.normal() * inv_sqrt_d;

        for (std::size_t i = 0; i < opt.items; ++i) {
            double affinity = 0.0;
            for (std::size_t f = 0; f < d; ++f) affinity += user_vec[f] * item_vec[i * d + f];
            double g = rng.uniform();
            while (g <= 0.0) g = rng.uniform();
            const double gumbel = -std::log(-std::log(g));
            keys[i] = {mainstream * log_pop[i] + opt.taste_weight * 2.0 * affinity + gumbel, i};
        }
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_u), keys.end(),
                          [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
        for (std::size_t k = 0; k < n_u; ++k) {
            const std::size_t i = keys[k].second;
            double affinity = 0.0;
            for (std::size_t f = 0; f < d; ++f) affinity += user_vec[f] * item_vec[i * d + f];
            const double raw = 3.6 + user_bias + quality[i] + 1.5 * affinity + opt.rating_noise * rng.normal();
            const double value = std::clamp(std::round(raw), 1.0, 5.0);
            out.push_back({static_cast<UserId>(u + 1), static_cast<ItemId>(i + 1), value, clock++});
        }
    }
    return out;
}

}  // namespace popbias
