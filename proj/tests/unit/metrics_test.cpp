#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "popbias/metrics.hpp"
#include "popbias/random.hpp"
#include "support.hpp"

using namespace popbias;
using testing_support::dataset;

namespace {

/// Popularity model over external items 0..n-1 with the given phi values; the
/// first `popular` items are marked popular.
PopularityModel model_with_phi(const std::vector<double>& phi, std::size_t popular = 0) {
    PopularityModel pm;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        pm.item_ids.push_back(static_cast<ItemId>(i));
        pm.rating_counts.push_back(0);
        pm.phi.push_back(phi[i]);
        pm.is_popular.push_back(i < popular);
        if (i < popular) pm.popular_set.push_back(static_cast<ItemIndex>(i));
    }
    return pm;
}

/// Batch over a catalog of external items 0..n_items-1.
RecommendationBatch batch_of(const std::map<UserId, std::vector<ItemId>>& lists, std::size_t n_items,
                             std::size_t top_n = 10) {
    RecommendationBatch b;
    b.top_n = top_n;
    for (std::size_t i = 0; i < n_items; ++i) b.item_ids.push_back(static_cast<ItemId>(i));
    for (const auto& [u, items] : lists) {
        UserRecommendations rec;
        rec.user_id = u;
        double score = static_cast<double>(items.size());
        for (ItemId i : items) rec.items.push_back({static_cast<ItemIndex>(i), score--});
        b.lists.push_back(rec);
    }
    return b;
}

std::vector<UserPropensity> props_with_ratios(const std::vector<double>& ratios) {
    std::vector<UserPropensity> out;
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        UserPropensity p;
        p.user = static_cast<UserIndex>(k);
        p.user_id = static_cast<UserId>(k);
        p.profile_size = 10;
        p.popular_ratio = ratios[k];
        out.push_back(p);
    }
    return out;
}

}  // namespace

TEST(Segment, TenUsersByRatio) {
    const auto g = segment_users(props_with_ratios({0.5, 0.9, 0.0, 0.3, 0.8, 0.1, 0.2, 0.4, 0.6, 0.7}));
    EXPECT_EQ(g.niche, (std::vector<UserId>{2, 5}));
    EXPECT_EQ(g.blockbuster, (std::vector<UserId>{1, 4}));
    EXPECT_EQ(g.diverse, (std::vector<UserId>{0, 3, 6, 7, 8, 9}));
    EXPECT_DOUBLE_EQ(g.niche_cut, 0.1);
    EXPECT_DOUBLE_EQ(g.blockbuster_cut, 0.8);
}

TEST(Segment, TiesPreferLargerProfileThenSmallerIndex) {
    auto props = props_with_ratios({0.5, 0.5, 0.5, 0.5, 0.5});
    props[3].profile_size = 20;
    const auto g = segment_users(props);
    EXPECT_EQ(g.niche, (std::vector<UserId>{3}));
    EXPECT_EQ(g.blockbuster, (std::vector<UserId>{4}));
}

TEST(Segment, NeedsFiveUsers) {
    EXPECT_THROW(segment_users(props_with_ratios({0.1, 0.2, 0.3, 0.4})), DataError);
}

TEST(Segment, PartitionAndSizeRules) {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> ratios(5 + rng.below(200));
        for (double& r : ratios) r = static_cast<double>(rng.below(11)) / 10.0;
        auto props = props_with_ratios(ratios);
        for (auto& p : props) p.profile_size = 1 + rng.below(50);
        const auto g = segment_users(props);
        const std::size_t n = ratios.size();
        EXPECT_EQ(g.niche.size(), n / 5);
        EXPECT_EQ(g.blockbuster.size(), n / 5);
        EXPECT_EQ(g.niche.size() + g.diverse.size() + g.blockbuster.size(), n);
        EXPECT_EQ(g.group_of.size(), n);
        double max_niche = 0.0, min_block = 1.0, min_div = 1.0, max_div = 0.0;
        for (UserId u : g.niche) max_niche = std::max(max_niche, ratios[u]);
        for (UserId u : g.blockbuster) min_block = std::min(min_block, ratios[u]);
        for (UserId u : g.diverse) {
            min_div = std::min(min_div, ratios[u]);
            max_div = std::max(max_div, ratios[u]);
        }
        EXPECT_LE(max_niche, min_div);
        EXPECT_LE(max_div, min_block);
    }
}

TEST(Gap, SingleUserMeanOfList) {
    const auto pm = model_with_phi({1.0, 0.5});
    const UserItemLists lists{{7, {0, 1}}};
    const std::vector<UserId> group{7};
    EXPECT_DOUBLE_EQ(group_gap(group, lists, pm), 0.75);
}

TEST(Gap, MeanOfMeansNotPooled) {
    const auto pm = model_with_phi({1.0, 0.5, 0.25, 0.25});
    // User 1: (1.0 + 0.5) / 2 = 0.75. User 2: 0.25 over two items.
    // A pooled mean would give 2.0 / 4 = 0.5 too, so user 2 gets three items.
    const UserItemLists lists{{1, {0, 1}}, {2, {2, 3, 2}}};
    const std::vector<UserId> group{1, 2};
    EXPECT_DOUBLE_EQ(group_gap(group, lists, pm), 0.5);
}

TEST(Gap, UnknownItemsContributeZero) {
    const auto pm = model_with_phi({1.0});
    const UserItemLists lists{{1, {0, 42}}};
    const std::vector<UserId> group{1};
    EXPECT_DOUBLE_EQ(group_gap(group, lists, pm), 0.5);
}

TEST(Gap, EmptyGroupOrListIsAnError) {
    const auto pm = model_with_phi({1.0});
    const UserItemLists lists{{1, {0}}, {2, {}}};
    EXPECT_THROW(group_gap(std::vector<UserId>{}, lists, pm), DataError);
    try {
        group_gap(std::vector<UserId>{1, 2}, lists, pm);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("user 2"), std::string::npos);
    }
    EXPECT_THROW(group_gap(std::vector<UserId>{3}, lists, pm), DataError);
}

TEST(Gap, SixUserMixedLengthsMatchLiteralDoubleSum) {
    const auto pm = model_with_phi({0.9, 0.7, 0.4, 0.2, 0.1, 0.05});
    const UserItemLists lists{{1, {0}}, {2, {0, 1, 2}}, {3, {5, 4}}, {4, {3, 3, 1, 0}}, {5, {2, 4}}, {6, {1, 5, 3}}};
    const std::vector<UserId> group{1, 2, 3, 4, 5, 6};
    const double expected =
        (0.9 + (0.9 + 0.7 + 0.4) / 3 + (0.05 + 0.1) / 2 + (0.2 + 0.2 + 0.7 + 0.9) / 4 + (0.4 + 0.1) / 2 +
         (0.7 + 0.05 + 0.2) / 3) / 6;
    EXPECT_NEAR(group_gap(group, lists, pm), expected, 1e-12);
}

TEST(Gap, RandomInstancesMatchBruteForceOracle) {
    Rng rng(123);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n_items = 1 + rng.below(12);
        const std::size_t n_users = 1 + rng.below(8);
        std::vector<double> phi(n_items);
        for (double& p : phi) p = rng.uniform();
        const auto pm = model_with_phi(phi);

        UserItemLists lists;
        std::vector<UserId> group;
        std::vector<std::vector<std::size_t>> raw(n_users);
        for (std::size_t u = 0; u < n_users; ++u) {
            const std::size_t len = 1 + rng.below(n_items);
            for (std::size_t k = 0; k < len; ++k) raw[u].push_back(rng.below(n_items));
            for (std::size_t i : raw[u]) lists[static_cast<UserId>(u)].push_back(static_cast<ItemId>(i));
            group.push_back(static_cast<UserId>(u));
        }

        double outer = 0.0;
        for (std::size_t u = 0; u < n_users; ++u) {
            double inner = 0.0;
            for (std::size_t k = 0; k < raw[u].size(); ++k) inner += phi[raw[u][k]];
            outer += inner / static_cast<double>(raw[u].size());
        }
        const double oracle = outer / static_cast<double>(n_users);
        const double gap = group_gap(group, lists, pm);
        EXPECT_NEAR(gap, oracle, 1e-12);
        EXPECT_GE(gap, 0.0);
        EXPECT_LE(gap, *std::max_element(phi.begin(), phi.end()) + 1e-15);
    }
}

TEST(DeltaGap, Examples) {
    EXPECT_DOUBLE_EQ(delta_gap(0.3, 0.3), 0.0);
    EXPECT_NEAR(delta_gap(0.2, 0.3), 0.5, 1e-12);
    EXPECT_NEAR(delta_gap(0.4, 0.3), -0.25, 1e-12);
    EXPECT_THROW(delta_gap(0.0, 0.3), UndefinedDeltaError);
}

TEST(DeltaGap, IdentitySignAndMonotonicity) {
    Rng rng(9);
    for (int trial = 0; trial < 500; ++trial) {
        const double gp = rng.uniform(1e-6, 1.0);
        const double a = rng.uniform();
        const double b = rng.uniform();
        EXPECT_EQ(delta_gap(gp, gp), 0.0);
        const auto v = make_gap_value(UserGroup::Diverse, gp, a);
        EXPECT_EQ(v.delta_gap, (a - gp) / gp);
        EXPECT_EQ(v.delta_gap > 0, a > gp);
        EXPECT_EQ(v.delta_gap < 0, a < gp);
        if (a < b) {
            EXPECT_LT(delta_gap(gp, a), delta_gap(gp, b));
        }
    }
}

TEST(DeltaGap, InvariantUnderPhiScaling) {
    Rng rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n_items = 2 + rng.below(11);
        std::vector<double> phi(n_items);
        for (double& p : phi) p = rng.uniform(0.01, 1.0);
        UserItemLists profiles, recs;
        std::vector<UserId> group;
        for (UserId u = 0; u < static_cast<UserId>(1 + rng.below(8)); ++u) {
            group.push_back(u);
            for (std::size_t k = 0, n = 1 + rng.below(n_items); k < n; ++k) profiles[u].push_back(rng.below(n_items));
            for (std::size_t k = 0, n = 1 + rng.below(n_items); k < n; ++k) recs[u].push_back(rng.below(n_items));
        }
        const double c = rng.uniform(0.01, 1.0);
        std::vector<double> scaled(phi);
        for (double& p : scaled) p *= c;
        const auto pm = model_with_phi(phi);
        const auto pm_c = model_with_phi(scaled);
        const double gp = group_gap(group, profiles, pm), gr = group_gap(group, recs, pm);
        const double gp_c = group_gap(group, profiles, pm_c), gr_c = group_gap(group, recs, pm_c);
        EXPECT_NEAR(gp_c, c * gp, 1e-12);
        EXPECT_NEAR(gr_c, c * gr, 1e-12);
        EXPECT_NEAR(delta_gap(gp_c, gr_c), delta_gap(gp, gr), 1e-9);
    }
}

TEST(Precision, OneHitInTen) {
    const auto batch = batch_of({{1, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}}}, 20);
    const std::vector<Rating> test{{1, 5, 4.0, 0}, {1, 15, 3.0, 0}};
    EXPECT_DOUBLE_EQ(precision_at_n(batch, test, 10), 0.1);
}

TEST(Precision, PerfectList) {
    const auto batch = batch_of({{1, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}}}, 10);
    std::vector<Rating> test;
    for (long i = 0; i < 10; ++i) test.push_back({1, i, 1.0, 0});
    EXPECT_DOUBLE_EQ(precision_at_n(batch, test, 10), 1.0);
}

TEST(Precision, ThreeUsersHandPlacedHits) {
    const auto batch = batch_of({{1, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}},
                                 {2, {10, 11, 12, 13, 14, 15, 16, 17, 18, 19}},
                                 {3, {20, 21, 22, 23, 24, 25, 26, 27, 28, 29}},
                                 {4, {0, 1}}},
                                40);
    const std::vector<Rating> test{{1, 3, 5, 0}, {1, 35, 5, 0}, {2, 30, 5, 0}, {3, 20, 5, 0}, {3, 29, 2, 0},
                                   {9, 1, 5, 0}};
    EXPECT_NEAR(precision_at_n(batch, test, 10), (0.1 + 0.0 + 0.2) / 3.0, 1e-12);
    // With a threshold of 4 user 3 keeps one hit.
    EXPECT_NEAR(precision_at_n(batch, test, 10, 4.0), (0.1 + 0.0 + 0.1) / 3.0, 1e-12);
}

TEST(Precision, NoEvaluableUser) {
    const auto batch = batch_of({{1, {0}}}, 2);
    const std::vector<Rating> test{{2, 0, 5, 0}};
    EXPECT_THROW(precision_at_n(batch, test, 10), DataError);
}

TEST(Precision, BoundedAndMonotoneInHits) {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::map<UserId, std::vector<ItemId>> lists;
        std::vector<Rating> test;
        for (UserId u = 0; u < 5; ++u) {
            for (ItemId i = 0; i < 10; ++i) lists[u].push_back(u * 10 + i);
            for (int k = 0; k < 3; ++k) test.push_back({u, static_cast<ItemId>(rng.below(60)), 3.0, 0});
        }
        const double before = precision_at_n(batch_of(lists, 60), test, 10);
        EXPECT_GE(before, 0.0);
        EXPECT_LE(before, 1.0);
        const UserId u = static_cast<UserId>(rng.below(5));
        test.push_back({u, lists[u][rng.below(10)], 3.0, 0});
        EXPECT_GE(precision_at_n(batch_of(lists, 60), test, 10), before);
    }
}

TEST(GroupRatio, SingletonGroupSummary) {
    UserGroupAssignment a;
    a.niche = {1};
    const auto pm = model_with_phi(std::vector<double>(20, 0.1), 7);
    const UserItemLists lists{{1, {0, 1, 2, 3, 4, 5, 6, 10, 11, 12}}};
    const auto s = group_ratio_summary(a, lists, pm, ListSource::Recommendations);
    ASSERT_EQ(s.size(), 3u);
    const auto& n = s[0];
    for (double v : {n.summary.min, n.summary.q1, n.summary.median, n.summary.q3, n.summary.max, n.summary.mean}) {
        EXPECT_NEAR(v, 0.7, 1e-12);
    }
}

TEST(GroupRatio, FourUserHinges) {
    UserGroupAssignment a;
    a.diverse = {1, 2, 3, 4, 5};
    const auto pm = model_with_phi(std::vector<double>(10, 0.1), 5);
    // Ratios 0.0, 0.2, 0.4, 1.0 over 5-item lists; user 5 has no list.
    const UserItemLists lists{{1, {5, 6, 7, 8, 9}}, {2, {0, 6, 7, 8, 9}}, {3, {0, 1, 7, 8, 9}}, {4, {0, 1, 2, 3, 4}}};
    const auto s = group_ratio_summary(a, lists, pm, ListSource::Profile)[1];
    EXPECT_EQ(s.skipped_users, 1u);
    EXPECT_EQ(s.ratios.size(), 4u);
    EXPECT_NEAR(s.summary.q1, 0.1, 1e-12);
    EXPECT_NEAR(s.summary.median, 0.3, 1e-12);
    EXPECT_NEAR(s.summary.q3, 0.7, 1e-12);
}

TEST(Exposure, SingleRecommendedItem) {
    const auto train = dataset({{1, 1, 4}, {1, 2, 2}, {2, 2, 5}, {3, 3, 1}, {3, 1, 3}});
    RecommendationBatch b;
    b.item_ids = train.item_ids();
    for (UserId u : {10, 11, 12, 13}) b.lists.push_back({u, std::nullopt, {{*train.item_index(3), 1.0}}, false});
    const auto rep = exposure_analysis(b, train);
    ASSERT_EQ(rep.records.size(), 3u);
    EXPECT_EQ(rep.records[0].times_recommended, 0u);
    EXPECT_EQ(rep.records[1].times_recommended, 0u);
    EXPECT_EQ(rep.records[2].times_recommended, 4u);
    EXPECT_EQ(rep.records[0].times_rated_train, 2u);
    EXPECT_DOUBLE_EQ(rep.records[0].mean_rating, 3.5);
    EXPECT_DOUBLE_EQ(rep.records[1].mean_rating, 3.5);
}

TEST(Exposure, ConservesListLengths) {
    Rng rng(31);
    std::vector<Rating> r;
    for (long u = 0; u < 20; ++u) {
        for (long i = 0; i < 30; ++i) {
            if (rng.uniform() < 0.3) r.push_back({u, i, static_cast<double>(1 + rng.below(5)), 0});
        }
    }
    const auto train = build_dataset(r);
    for (int trial = 0; trial < 50; ++trial) {
        RecommendationBatch b;
        b.item_ids = train.item_ids();
        std::size_t total = 0;
        for (UserId u = 0; u < 15; ++u) {
            UserRecommendations rec;
            rec.user_id = u;
            for (std::size_t k = 0, n = rng.below(10); k < n; ++k) {
                rec.items.push_back({static_cast<ItemIndex>(rng.below(train.num_items())), 0.0});
            }
            total += rec.items.size();
            b.lists.push_back(rec);
        }
        try {
            const auto rep = exposure_analysis(b, train);
            std::size_t sum = 0;
            for (const auto& e : rep.records) sum += e.times_recommended;
            EXPECT_EQ(sum, total);
            EXPECT_GE(rep.pearson, -1.0);
            EXPECT_LE(rep.pearson, 1.0);
        } catch (const UndefinedCorrelationError&) {
            // Only possible when every item was recommended equally often.
        }
    }
}
