#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "popbias/popularity.hpp"
#include "popbias/random.hpp"
#include "support.hpp"

using namespace popbias;
using testing_support::dataset;

TEST(Popularity, PhiIsFractionOfUsers) {
    const auto ds = dataset({{1, 100, 5}, {2, 100, 4}, {3, 100, 3}, {4, 100, 2}, {1, 200, 5}, {2, 200, 1}});
    const auto pm = popularity_model(ds);
    EXPECT_DOUBLE_EQ(pm.phi_of(100), 1.0);
    EXPECT_DOUBLE_EQ(pm.phi_of(200), 0.5);
    EXPECT_DOUBLE_EQ(pm.phi_of(999), 0.0);
    EXPECT_FALSE(pm.popular(999));
}

TEST(Popularity, TopTwentyPercentOfTenItems) {
    std::vector<Rating> r;
    // Item k is rated by k users, so items 10 and 9 are the most rated.
    for (long item = 1; item <= 10; ++item) {
        for (long user = 1; user <= item; ++user) r.push_back({user, item, 3.0, 0});
    }
    const auto pm = popularity_model(build_dataset(r), 0.2);
    ASSERT_EQ(pm.popular_set.size(), 2u);
    EXPECT_TRUE(pm.popular(10));
    EXPECT_TRUE(pm.popular(9));
    EXPECT_FALSE(pm.popular(8));
}

TEST(Popularity, TiesPreferSmallerIndex) {
    const auto ds = dataset({{1, 1, 1}, {1, 2, 1}, {1, 3, 1}, {1, 4, 1}, {1, 5, 1}});
    const auto pm = popularity_model(ds, 0.2);
    ASSERT_EQ(pm.popular_set.size(), 1u);
    EXPECT_EQ(pm.popular_set[0], 0u);
    EXPECT_THROW(popularity_model(ds, 0.0), ConfigError);
    EXPECT_THROW(popularity_model(ds, 1.0), ConfigError);
}

TEST(Popularity, PopularSetMatchesBruteForceSort) {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t users = 1 + rng.below(10);
        const std::size_t items = 1 + rng.below(15);
        std::vector<Rating> r;
        for (std::size_t u = 0; u < users; ++u) {
            for (std::size_t i = 0; i < items; ++i) {
                if (rng.uniform() < 0.4) r.push_back({static_cast<long>(u), static_cast<long>(i), 1.0, 0});
            }
        }
        if (r.empty()) continue;
        const auto ds = build_dataset(r);
        const double q = rng.uniform(0.05, 0.95);
        const auto pm = popularity_model(ds, q);

        const std::size_t n = ds.num_items();
        std::size_t expected_size = 0;
        while (static_cast<double>(expected_size) < q * static_cast<double>(n) - 1e-9) ++expected_size;
        ASSERT_EQ(pm.popular_set.size(), expected_size);

        std::vector<std::pair<long, ItemIndex>> keyed;
        for (ItemIndex i = 0; i < n; ++i) keyed.push_back({-static_cast<long>(ds.rating_count(i)), i});
        std::sort(keyed.begin(), keyed.end());
        for (std::size_t k = 0; k < n; ++k) {
            EXPECT_EQ(pm.is_popular[keyed[k].second], k < expected_size);
        }

        std::size_t total = 0;
        for (ItemIndex i = 0; i < n; ++i) {
            total += pm.rating_counts[i];
            EXPECT_GT(pm.phi[i], 0.0);
            EXPECT_LE(pm.phi[i], 1.0);
        }
        EXPECT_EQ(total, ds.num_ratings());
    }
}

TEST(Propensity, RatioAndCount) {
    // Items 1..5; item 1 rated by everyone so it is the single popular item.
    const auto ds = dataset({{1, 1, 5}, {1, 2, 4}, {2, 1, 3}, {3, 1, 3}, {3, 3, 2}, {3, 4, 1}, {4, 1, 2}, {4, 5, 2}});
    const auto pm = popularity_model(ds, 0.2);
    ASSERT_TRUE(pm.popular(1));
    const auto props = user_propensities(ds, pm);
    ASSERT_EQ(props.size(), 4u);
    EXPECT_EQ(props[0].popular_count, 1u);
    EXPECT_DOUBLE_EQ(props[0].popular_ratio, 0.5);
    EXPECT_DOUBLE_EQ(props[1].popular_ratio, 1.0);
    EXPECT_NEAR(props[2].popular_ratio, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(props[0].mean_item_popularity, (1.0 + 0.25) / 2.0, 1e-12);
    for (const auto& p : props) {
        EXPECT_LE(p.popular_count, p.profile_size);
        EXPECT_GE(p.popular_ratio, 0.0);
        EXPECT_LE(p.popular_ratio, 1.0);
        EXPECT_GE(p.mean_item_popularity, 0.0);
        EXPECT_LE(p.mean_item_popularity, 1.0);
    }
}

TEST(Propensity, ItemsMissingFromModelCountAsNonPopular) {
    const auto small = dataset({{1, 1, 5}, {2, 1, 5}});
    const auto pm = popularity_model(small, 0.5);
    const auto ds = dataset({{1, 1, 5}, {1, 9, 5}});
    const auto props = user_propensities(ds, pm);
    EXPECT_DOUBLE_EQ(props[0].popular_ratio, 0.5);
    EXPECT_DOUBLE_EQ(props[0].mean_item_popularity, 0.5);
}

TEST(Propensity, ConstantComponentMakesCorrelationUndefined) {
    std::vector<UserPropensity> props(2);
    props[0].profile_size = 4;
    props[1].profile_size = 8;
    for (auto& p : props) {
        p.popular_count = 2;
        p.popular_ratio = 0.5;
        p.mean_item_popularity = 0.3;
    }
    EXPECT_THROW(profile_size_correlations(props), UndefinedCorrelationError);
}
