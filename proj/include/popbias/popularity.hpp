#pragma once

// Item popularity, the popular-item set, and per-user propensity for popular
// items.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "popbias/data.hpp"
#include "popbias/stats.hpp"

namespace popbias {

struct PopularityModel {
    /// Dense item index of the source dataset -> external id (ascending).
    std::vector<ItemId> item_ids;
    std::vector<std::size_t> rating_counts;
    /// phi(i) = rating_counts(i) / number of users in the source dataset.
    std::vector<double> phi;
    /// Popular items, most-rated first.
    std::vector<ItemIndex> popular_set;
    std::vector<bool> is_popular;
    double quantile = 0.2;
    std::size_t source_users = 0;

    std::size_t num_items() const { return item_ids.size(); }

    std::optional<ItemIndex> index_of(ItemId id) const {
        const auto it = std::lower_bound(item_ids.begin(), item_ids.end(), id);
        if (it == item_ids.end() || *it != id) return std::nullopt;
        return static_cast<ItemIndex>(it - item_ids.begin());
    }

    /// Items unknown to the model have phi = 0.
    double phi_of(ItemId id) const {
        const auto i = index_of(id);
        return i ? phi[*i] : 0.0;
    }

    /// Items unknown to the model are non-popular.
    bool popular(ItemId id) const {
        const auto i = index_of(id);
        return i && is_popular[*i];
    }
};

/// Items ordered by descending rating count, smaller index first on ties.
inline std::vector<ItemIndex> items_by_count(const RatingDataset& ds) {
    std::vector<ItemIndex> order(ds.num_items());
    std::iota(order.begin(), order.end(), ItemIndex{0});
    std::stable_sort(order.begin(), order.end(), [&](ItemIndex a, ItemIndex b) {
        return ds.rating_count(a) > ds.rating_count(b);
    });
    return order;
}

inline PopularityModel popularity_model(const RatingDataset& ds, double quantile = 0.2) {
    if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("popular quantile must lie in (0, 1)");
    PopularityModel pm;
    pm.item_ids = ds.item_ids();
    pm.quantile = quantile;
    pm.source_users = ds.num_users();
    pm.rating_counts.resize(ds.num_items());
    pm.phi.resize(ds.num_items());
    const double n_users = static_cast<double>(ds.num_users());
    for (ItemIndex i = 0; i < ds.num_items(); ++i) {
        pm.rating_counts[i] = ds.rating_count(i);
        pm.phi[i] = static_cast<double>(pm.rating_counts[i]) / n_users;
    }
    // The small epsilon keeps e.g. 0.2 * 10 from rounding up to 3.
    const auto n_popular = static_cast<std::size_t>(
        std::ceil(quantile * static_cast<double>(ds.num_items()) - 1e-9));
    const auto order = items_by_count(ds);
    pm.popular_set.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_popular));
    pm.is_popular.assign(ds.num_items(), false);
    for (ItemIndex i : pm.popular_set) pm.is_popular[i] = true;
    return pm;
}

struct UserPropensity {
    UserIndex user = 0;
    UserId user_id = 0;
    std::size_t profile_size = 0;
    std::size_t popular_count = 0;
    double popular_ratio = 0.0;
    double mean_item_popularity = 0.0;
};

/// One record per user of `ds`. Items are matched to `pm` by external id, so
/// the popularity model may come from a different (covering) dataset.
inline std::vector<UserPropensity> user_propensities(const RatingDataset& ds, const PopularityModel& pm) {
    // Map ds item indices onto pm once.
    std::vector<double> phi(ds.num_items(), 0.0);
    std::vector<bool> popular(ds.num_items(), false);
    for (ItemIndex i = 0; i < ds.num_items(); ++i) {
        if (const auto j = pm.index_of(ds.item_id(i))) {
            phi[i] = pm.phi[*j];
            popular[i] = pm.is_popular[*j];
        }
    }
    std::vector<UserPropensity> out(ds.num_users());
    for (UserIndex u = 0; u < ds.num_users(); ++u) {
        auto& p = out[u];
        p.user = u;
        p.user_id = ds.user_id(u);
        const auto items = ds.profile_items(u);
        p.profile_size = items.size();
        double phi_sum = 0.0;
        for (ItemIndex i : items) {
            p.popular_count += popular[i] ? 1 : 0;
            phi_sum += phi[i];
        }
        if (p.profile_size > 0) {
            p.popular_ratio = static_cast<double>(p.popular_count) / static_cast<double>(p.profile_size);
            p.mean_item_popularity = phi_sum / static_cast<double>(p.profile_size);
        }
    }
    return out;
}

struct ProfileSizeCorrelations {
    double popular_count = 0.0;
    double popular_ratio = 0.0;
    double mean_item_popularity = 0.0;
};

/// Pearson of profile size against popular count, popular ratio and mean
/// item popularity.
inline ProfileSizeCorrelations profile_size_correlations(std::span<const UserPropensity> props) {
    if (props.size() < 2) throw UndefinedCorrelationError("profile-size correlations need at least two users");
    std::vector<double> size, count, ratio, mip;
    for (const auto& p : props) {
        size.push_back(static_cast<double>(p.profile_size));
        count.push_back(static_cast<double>(p.popular_count));
        ratio.push_back(p.popular_ratio);
        mip.push_back(p.mean_item_popularity);
    }
    return {pearson(size, count), pearson(size, ratio), pearson(size, mip)};
}

}  // namespace popbias
