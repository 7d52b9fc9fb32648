#pragma once

// User-group segmentation and the popularity-bias statistics computed per
// group: GAP, delta-GAP, popular-ratio summaries, precision@N and item
// exposure. Item lists are keyed by external ids so profiles, recommendation
// lists and popularity models built on different splits line up.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "popbias/data.hpp"
#include "popbias/popularity.hpp"
#include "popbias/recommender.hpp"
#include "popbias/stats.hpp"

namespace popbias {

enum class UserGroup { Niche, Diverse, Blockbuster };

inline constexpr std::array<UserGroup, 3> kAllGroups = {UserGroup::Niche, UserGroup::Diverse, UserGroup::Blockbuster};

inline std::string_view to_string(UserGroup g) {
    switch (g) {
        case UserGroup::Niche: return "niche";
        case UserGroup::Diverse: return "diverse";
        case UserGroup::Blockbuster: return "blockbuster";
    }
    return "unknown";
}

/// user id -> item ids (a profile or a ranked recommendation list).
using UserItemLists = std::map<UserId, std::vector<ItemId>>;

inline UserItemLists profile_lists(const RatingDataset& ds) {
    UserItemLists out;
    for (UserIndex u = 0; u < ds.num_users(); ++u) {
        auto& list = out[ds.user_id(u)];
        for (ItemIndex i : ds.profile_items(u)) list.push_back(ds.item_id(i));
    }
    return out;
}

inline UserItemLists recommendation_lists(const RecommendationBatch& batch) {
    UserItemLists out;
    for (const auto& rec : batch.lists) {
        auto& list = out[rec.user_id];
        for (const auto& s : rec.items) list.push_back(batch.item_id(s.item));
    }
    return out;
}

struct UserGroupAssignment {
    std::vector<UserId> niche;
    std::vector<UserId> diverse;
    std::vector<UserId> blockbuster;
    /// Largest popular ratio inside Niche / smallest inside Blockbuster.
    double niche_cut = 0.0;
    double blockbuster_cut = 0.0;
    std::map<UserId, UserGroup> group_of;

    const std::vector<UserId>& members(UserGroup g) const {
        switch (g) {
            case UserGroup::Niche: return niche;
            case UserGroup::Diverse: return diverse;
            case UserGroup::Blockbuster: return blockbuster;
        }
        return diverse;
    }
};

/// Sorts users by popular ratio ascending (ties: larger profile first, then
/// smaller user index); the first floor(0.2 n) are Niche, the last floor(0.2 n)
/// Blockbuster, the rest Diverse. Member lists are in ascending user id.
inline UserGroupAssignment segment_users(std::span<const UserPropensity> props) {
    std::vector<const UserPropensity*> users;
    for (const auto& p : props) {
        if (p.profile_size > 0) users.push_back(&p);
    }
    if (users.size() < 5) throw DataError("segmenting users needs at least 5 users with nonempty profiles");
    std::sort(users.begin(), users.end(), [](const UserPropensity* a, const UserPropensity* b) {
        if (a->popular_ratio != b->popular_ratio) return a->popular_ratio < b->popular_ratio;
        if (a->profile_size != b->profile_size) return a->profile_size > b->profile_size;
        return a->user < b->user;
    });
    const std::size_t n = users.size();
    const std::size_t slice = n / 5;

    UserGroupAssignment out;
    for (std::size_t k = 0; k < n; ++k) {
        const UserGroup g = k < slice ? UserGroup::Niche : (k >= n - slice ? UserGroup::Blockbuster : UserGroup::Diverse);
        out.group_of[users[k]->user_id] = g;
    }
    for (const auto& [id, g] : out.group_of) {
        (g == UserGroup::Niche ? out.niche : g == UserGroup::Blockbuster ? out.blockbuster : out.diverse).push_back(id);
    }
    out.niche_cut = users[slice - 1]->popular_ratio;
    out.blockbuster_cut = users[n - slice]->popular_ratio;
    return out;
}

/// Group average popularity: the mean over members of the mean phi over each
/// member's list.
inline double group_gap(std::span<const UserId> group, const UserItemLists& lists, const PopularityModel& pm) {
    if (group.empty()) throw DataError("GAP of an empty group");
    double total = 0.0;
    for (UserId u : group) {
        const auto it = lists.find(u);
        if (it == lists.end() || it->second.empty()) {
            throw DataError("GAP: user " + std::to_string(u) + " has an empty item list");
        }
        double sum = 0.0;
        for (ItemId i : it->second) sum += pm.phi_of(i);
        total += sum / static_cast<double>(it->second.size());
    }
    return total / static_cast<double>(group.size());
}

/// Members of `group` that have a nonempty list in `lists`.
inline std::vector<UserId> members_with_lists(std::span<const UserId> group, const UserItemLists& lists) {
    std::vector<UserId> out;
    for (UserId u : group) {
        const auto it = lists.find(u);
        if (it != lists.end() && !it->second.empty()) out.push_back(u);
    }
    return out;
}

/// (gap_recs - gap_profile) / gap_profile
inline double delta_gap(double gap_profile, double gap_recs) {
    if (!(gap_profile > 0.0)) throw UndefinedDeltaError("delta-GAP undefined for a zero profile GAP");
    return (gap_recs - gap_profile) / gap_profile;
}

struct GapValue {
    UserGroup group = UserGroup::Niche;
    double gap_profile = 0.0;
    double gap_recs = 0.0;
    double delta_gap = 0.0;
};

inline GapValue make_gap_value(UserGroup group, double gap_profile, double gap_recs) {
    return {group, gap_profile, gap_recs, delta_gap(gap_profile, gap_recs)};
}

/// Mean over evaluable users of |top-n list ∩ relevant test items| / n. A user
/// is evaluable when it appears in the batch and has at least one relevant
/// test rating (value >= threshold, when a threshold is given).
inline double precision_at_n(const RecommendationBatch& batch, std::span<const Rating> test, std::size_t n,
                             std::optional<double> relevance_threshold = std::nullopt) {
    if (n < 1) throw ConfigError("precision@n needs n >= 1");
    std::unordered_map<UserId, std::unordered_set<ItemId>> relevant;
    for (const auto& r : test) {
        if (relevance_threshold && r.value < *relevance_threshold) continue;
        relevant[r.user].insert(r.item);
    }
    std::vector<UserId> users;
    for (const auto& [u, items] : relevant) users.push_back(u);
    std::sort(users.begin(), users.end());

    double total = 0.0;
    std::size_t evaluated = 0;
    for (UserId u : users) {
        const UserRecommendations* rec = batch.find(u);
        if (rec == nullptr) continue;
        const auto& items = relevant[u];
        std::size_t hits = 0;
        const std::size_t depth = std::min(n, rec->items.size());
        for (std::size_t k = 0; k < depth; ++k) {
            hits += items.count(batch.item_id(rec->items[k].item));
        }
        total += static_cast<double>(hits) / static_cast<double>(n);
        ++evaluated;
    }
    if (evaluated == 0) throw DataError("precision@n: no evaluable user");
    return total / static_cast<double>(evaluated);
}

enum class ListSource { Profile, Recommendations };

inline std::string_view to_string(ListSource s) { return s == ListSource::Profile ? "profile" : "recommendations"; }

struct GroupRatioSummary {
    UserGroup group = UserGroup::Niche;
    ListSource source = ListSource::Profile;
    /// Per-user popular ratios, in ascending user id of the evaluated users.
    std::vector<UserId> users;
    std::vector<double> ratios;
    /// Zero-initialized when no member had a list.
    FiveNumberSummary summary;
    std::size_t skipped_users = 0;
};

inline std::vector<GroupRatioSummary> group_ratio_summary(const UserGroupAssignment& assignment,
                                                          const UserItemLists& lists, const PopularityModel& pm,
                                                          ListSource source) {
    std::vector<GroupRatioSummary> out;
    for (UserGroup g : kAllGroups) {
        GroupRatioSummary s;
        s.group = g;
        s.source = source;
        for (UserId u : assignment.members(g)) {
            const auto it = lists.find(u);
            if (it == lists.end() || it->second.empty()) {
                ++s.skipped_users;
                continue;
            }
            std::size_t popular = 0;
            for (ItemId i : it->second) popular += pm.popular(i) ? 1 : 0;
            s.users.push_back(u);
            s.ratios.push_back(static_cast<double>(popular) / static_cast<double>(it->second.size()));
        }
        if (!s.ratios.empty()) s.summary = five_number_summary(s.ratios);
        out.push_back(std::move(s));
    }
    return out;
}

struct ExposureRecord {
    ItemIndex item = 0;
    ItemId item_id = 0;
    std::size_t times_rated_train = 0;
    std::size_t times_recommended = 0;
    double mean_rating = 0.0;
};

struct ExposureReport {
    std::vector<ExposureRecord> records;
    /// Pearson(times_rated_train, times_recommended) over all training items.
    double pearson = 0.0;
};

inline ExposureReport exposure_analysis(const RecommendationBatch& batch, const RatingDataset& train) {
    if (batch.lists.empty()) throw DataError("exposure analysis of an empty batch");
    ExposureReport rep;
    rep.records.resize(train.num_items());
    for (ItemIndex i = 0; i < train.num_items(); ++i) {
        auto& r = rep.records[i];
        r.item = i;
        r.item_id = train.item_id(i);
        r.times_rated_train = train.rating_count(i);
        r.mean_rating = train.by_item().row_mean(i);
    }
    for (const auto& rec : batch.lists) {
        for (const auto& s : rec.items) {
            const auto i = train.item_index(batch.item_id(s.item));
            if (i) ++rep.records[*i].times_recommended;
        }
    }
    std::vector<double> rated, recommended;
    for (const auto& r : rep.records) {
        rated.push_back(static_cast<double>(r.times_rated_train));
        recommended.push_back(static_cast<double>(r.times_recommended));
    }
    rep.pearson = pearson(rated, recommended);
    return rep;
}

}  // namespace popbias
