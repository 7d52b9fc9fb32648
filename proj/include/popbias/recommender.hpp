#pragma once

// Trained models behind one interface, and top-N list generation.

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "popbias/algorithm.hpp"
#include "popbias/data.hpp"
#include "popbias/factorization.hpp"
#include "popbias/popularity.hpp"
#include "popbias/random.hpp"
#include "popbias/similarity.hpp"

namespace popbias {

struct MostPopularModel {
    std::vector<std::size_t> counts;
    /// Items by descending count, smaller index first on ties.
    std::vector<ItemIndex> ranking;
};

struct RandomModel {
    std::uint64_t seed = 0;
};

struct KnnModel {
    NeighborLists similarities;
    KnnRanking ranking = KnnRanking::PredictedRating;
    /// ItemKnn only: for item j, the items that list j as a neighbour, with
    /// the similarity.
    std::vector<std::vector<Neighbor>> reverse_neighbors;
    std::vector<double> user_means;
    std::vector<double> item_means;
};

class TrainedModel {
public:
    using State = std::variant<MostPopularModel, RandomModel, KnnModel, BiasedMfModel, SvdppModel>;

    TrainedModel(AlgorithmConfig config, std::shared_ptr<const RatingDataset> train, State state)
        : config_(config), train_(std::move(train)), state_(std::move(state)) {}

    Algorithm algorithm() const { return config_.algorithm; }
    const AlgorithmConfig& config() const { return config_; }
    const RatingDataset& train() const { return *train_; }
    const State& state() const { return state_; }

    /// Scores every training item for one user; `user` is empty for users
    /// absent from training. Higher is better.
    void score_all(std::optional<UserIndex> user, UserId user_id, std::span<double> out) const;

    double predict(std::optional<UserIndex> user, std::optional<ItemIndex> item) const;

private:
    AlgorithmConfig config_;
    std::shared_ptr<const RatingDataset> train_;
    State state_;
};

namespace detail {

inline std::optional<double> find_value(std::span<const std::uint32_t> cols, std::span<const double> vals,
                                        std::uint32_t key) {
    const auto it = std::lower_bound(cols.begin(), cols.end(), key);
    if (it == cols.end() || *it != key) return std::nullopt;
    return vals[static_cast<std::size_t>(it - cols.begin())];
}

inline double finish_knn(KnnRanking ranking, double base, double num, double den, double sim_sum) {
    if (ranking == KnnRanking::SimilaritySum) return sim_sum;
    return den > 0.0 ? base + num / den : base;
}

/// Per-user key stream shared by score_all and predict for Random.
inline Rng random_stream(std::uint64_t seed, UserId user_id) {
    return Rng(derive_seed(seed, static_cast<std::uint64_t>(user_id)));
}

}  // namespace detail

inline double TrainedModel::predict(std::optional<UserIndex> user, std::optional<ItemIndex> item) const {
    const RatingDataset& ds = *train_;
    return std::visit(
        [&](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, MostPopularModel>) {
                return item ? static_cast<double>(m.counts[*item]) : 0.0;
            } else if constexpr (std::is_same_v<M, RandomModel>) {
                if (!item) return 0.0;
                const UserId uid = user ? ds.user_id(*user) : UserId{-1};
                Rng rng = detail::random_stream(m.seed, uid);
                double key = 0.0;
                for (ItemIndex i = 0; i <= *item; ++i) key = rng.uniform();
                return key;
            } else if constexpr (std::is_same_v<M, KnnModel>) {
                if (!user && !item) return ds.global_mean();
                if (!item) return m.user_means[*user];
                if (!user) return m.item_means[*item];
                double num = 0.0, den = 0.0, sim_sum = 0.0;
                if (m.similarities.kind == NeighborKind::User) {
                    for (const Neighbor& v : m.similarities.neighbors[*user]) {
                        if (auto r = detail::find_value(ds.profile_items(v.index), ds.profile_values(v.index), *item)) {
                            num += v.similarity * (*r - m.user_means[v.index]);
                            den += std::abs(v.similarity);
                            sim_sum += v.similarity;
                        }
                    }
                    return detail::finish_knn(m.ranking, m.user_means[*user], num, den, sim_sum);
                }
                for (const Neighbor& j : m.similarities.neighbors[*item]) {
                    if (auto r = detail::find_value(ds.profile_items(*user), ds.profile_values(*user), j.index)) {
                        num += j.similarity * (*r - m.item_means[j.index]);
                        den += std::abs(j.similarity);
                        sim_sum += j.similarity;
                    }
                }
                return detail::finish_knn(m.ranking, m.item_means[*item], num, den, sim_sum);
            } else {
                return m.predict(user, item);
            }
        },
        state_);
}

inline void TrainedModel::score_all(std::optional<UserIndex> user, UserId user_id, std::span<double> out) const {
    const RatingDataset& ds = *train_;
    const std::size_t n_items = ds.num_items();
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, MostPopularModel>) {
                for (ItemIndex i = 0; i < n_items; ++i) out[i] = static_cast<double>(m.counts[i]);
            } else if constexpr (std::is_same_v<M, RandomModel>) {
                Rng rng = detail::random_stream(m.seed, user_id);
                for (ItemIndex i = 0; i < n_items; ++i) out[i] = rng.uniform();
            } else if constexpr (std::is_same_v<M, KnnModel>) {
                if (!user) {
                    for (ItemIndex i = 0; i < n_items; ++i) {
                        out[i] = m.ranking == KnnRanking::SimilaritySum ? 0.0 : m.item_means[i];
                    }
                    return;
                }
                std::vector<double> num(n_items, 0.0), den(n_items, 0.0), sim_sum(n_items, 0.0);
                if (m.similarities.kind == NeighborKind::User) {
                    for (const Neighbor& v : m.similarities.neighbors[*user]) {
                        const auto items = ds.profile_items(v.index);
                        const auto values = ds.profile_values(v.index);
                        const double mv = m.user_means[v.index];
                        for (std::size_t x = 0; x < items.size(); ++x) {
                            num[items[x]] += v.similarity * (values[x] - mv);
                            den[items[x]] += std::abs(v.similarity);
                            sim_sum[items[x]] += v.similarity;
                        }
                    }
                    for (ItemIndex i = 0; i < n_items; ++i) {
                        out[i] = detail::finish_knn(m.ranking, m.user_means[*user], num[i], den[i], sim_sum[i]);
                    }
                    return;
                }
                const auto items = ds.profile_items(*user);
                const auto values = ds.profile_values(*user);
                for (std::size_t x = 0; x < items.size(); ++x) {
                    const ItemIndex j = items[x];
                    const double dev = values[x] - m.item_means[j];
                    for (const Neighbor& i : m.reverse_neighbors[j]) {
                        num[i.index] += i.similarity * dev;
                        den[i.index] += std::abs(i.similarity);
                        sim_sum[i.index] += i.similarity;
                    }
                }
                for (ItemIndex i = 0; i < n_items; ++i) {
                    out[i] = detail::finish_knn(m.ranking, m.item_means[i], num[i], den[i], sim_sum[i]);
                }
            } else if constexpr (std::is_same_v<M, BiasedMfModel>) {
                for (ItemIndex i = 0; i < n_items; ++i) out[i] = m.predict(user, i);
            } else {
                if (!user) {
                    for (ItemIndex i = 0; i < n_items; ++i) out[i] = m.base.predict(std::nullopt, i);
                    return;
                }
                const auto z = m.user_vector(*user);
                const double base = m.base.global_mean + m.base.user_bias[*user];
                for (ItemIndex i = 0; i < n_items; ++i) {
                    out[i] = base + m.base.item_bias[i] + dot(m.base.item_factors.row(i), z);
                }
            }
        },
        state_);
}

inline TrainedModel train(const AlgorithmConfig& config, std::shared_ptr<const RatingDataset> train_set) {
    config.validate();
    if (!train_set || train_set->num_ratings() == 0) throw DataError("cannot train on an empty training set");
    const RatingDataset& ds = *train_set;

    auto make_state = [&]() -> TrainedModel::State {
        switch (config.algorithm) {
            case Algorithm::MostPopular: {
                MostPopularModel m;
                m.counts.resize(ds.num_items());
                for (ItemIndex i = 0; i < ds.num_items(); ++i) m.counts[i] = ds.rating_count(i);
                m.ranking = items_by_count(ds);
                return m;
            }
            case Algorithm::Random:
                return RandomModel{config.seed};
            case Algorithm::UserKnn:
            case Algorithm::ItemKnn: {
                KnnModel m;
                const auto kind = config.algorithm == Algorithm::UserKnn ? NeighborKind::User : NeighborKind::Item;
                m.similarities = similarity(kind, ds, {config.k, config.min_overlap, config.shrinkage});
                m.ranking = config.knn_ranking;
                m.user_means.resize(ds.num_users());
                for (UserIndex u = 0; u < ds.num_users(); ++u) m.user_means[u] = ds.by_user().row_mean(u);
                m.item_means.resize(ds.num_items());
                for (ItemIndex i = 0; i < ds.num_items(); ++i) m.item_means[i] = ds.by_item().row_mean(i);
                if (kind == NeighborKind::Item) {
                    m.reverse_neighbors.resize(ds.num_items());
                    for (ItemIndex i = 0; i < ds.num_items(); ++i) {
                        for (const Neighbor& j : m.similarities.neighbors[i]) {
                            m.reverse_neighbors[j.index].push_back({i, j.similarity});
                        }
                    }
                }
                return m;
            }
            case Algorithm::BiasedMf:
                return train_biased_mf(config, ds);
            case Algorithm::SvdPlusPlus:
                return train_svdpp(config, ds);
        }
        throw ConfigError("unknown algorithm");
    };
    auto state = make_state();
    return TrainedModel(config, std::move(train_set), std::move(state));
}

inline TrainedModel train(const AlgorithmConfig& config, const RatingDataset& train_set) {
    return train(config, std::make_shared<const RatingDataset>(train_set));
}

struct ScoredItem {
    ItemIndex item;
    double score;

    friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

struct UserRecommendations {
    UserId user_id = 0;
    /// Empty for users absent from the training set.
    std::optional<UserIndex> user;
    std::vector<ScoredItem> items;
    /// Fewer than top_n candidates were available.
    bool truncated = false;
};

struct RecommendationBatch {
    Algorithm algorithm = Algorithm::MostPopular;
    std::size_t top_n = 10;
    /// Training item index -> external id.
    std::vector<ItemId> item_ids;
    /// Ordered by ascending user id.
    std::vector<UserRecommendations> lists;

    ItemId item_id(ItemIndex i) const { return item_ids[i]; }
    bool any_truncated() const {
        return std::any_of(lists.begin(), lists.end(), [](const auto& l) { return l.truncated; });
    }
    const UserRecommendations* find(UserId id) const {
        const auto it = std::lower_bound(lists.begin(), lists.end(), id,
                                         [](const UserRecommendations& l, UserId v) { return l.user_id < v; });
        return it != lists.end() && it->user_id == id ? &*it : nullptr;
    }
};

/// Higher score first, smaller item index on ties.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
}

/// Top-N lists for the given external user ids (duplicates are collapsed).
/// Candidates are all training items minus the user's training profile;
/// users unknown to training are scored with the model's fallbacks.
inline RecommendationBatch recommend_for_users(const TrainedModel& model, const RatingDataset& train,
                                               std::span<const UserId> user_ids, std::size_t top_n) {
    if (user_ids.empty()) throw DataError("no users to recommend for");
    if (top_n < 1) throw ConfigError("top_n must be >= 1");
    std::vector<UserId> users(user_ids.begin(), user_ids.end());
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());

    RecommendationBatch batch;
    batch.algorithm = model.algorithm();
    batch.top_n = top_n;
    batch.item_ids = train.item_ids();
    batch.lists.reserve(users.size());

    const std::size_t n_items = train.num_items();
    std::vector<double> scores(n_items);
    std::vector<bool> excluded(n_items, false);
    std::vector<ScoredItem> candidates;
    candidates.reserve(n_items);
    for (UserId uid : users) {
        UserRecommendations rec;
        rec.user_id = uid;
        rec.user = train.user_index(uid);
        model.score_all(rec.user, uid, scores);
        if (rec.user) {
            for (ItemIndex i : train.profile_items(*rec.user)) excluded[i] = true;
        }
        candidates.clear();
        for (ItemIndex i = 0; i < n_items; ++i) {
            if (!excluded[i]) candidates.push_back({i, scores[i]});
        }
        if (rec.user) {
            for (ItemIndex i : train.profile_items(*rec.user)) excluded[i] = false;
        }
        const std::size_t take = std::min(top_n, candidates.size());
        rec.truncated = take < top_n;
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                          ranks_before);
        rec.items.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
        batch.lists.push_back(std::move(rec));
    }
    return batch;
}

/// Top-N lists for training users given by dense index.
inline RecommendationBatch recommend_top_n(const TrainedModel& model, const RatingDataset& train,
                                           std::span<const UserIndex> users, std::size_t top_n) {
    std::vector<UserId> ids;
    ids.reserve(users.size());
    for (UserIndex u : users) ids.push_back(train.user_id(u));
    return recommend_for_users(model, train, ids, top_n);
}

}  // namespace popbias
