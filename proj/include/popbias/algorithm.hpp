#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "popbias/error.hpp"

namespace popbias {

enum class Algorithm { MostPopular, Random, UserKnn, ItemKnn, BiasedMf, SvdPlusPlus };

inline constexpr std::array<Algorithm, 6> kAllAlgorithms = {
    Algorithm::MostPopular, Algorithm::Random, Algorithm::UserKnn,
    Algorithm::ItemKnn,     Algorithm::BiasedMf, Algorithm::SvdPlusPlus};

inline std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::MostPopular: return "most-popular";
        case Algorithm::Random: return "random";
        case Algorithm::UserKnn: return "user-knn";
        case Algorithm::ItemKnn: return "item-knn";
        case Algorithm::BiasedMf: return "biased-mf";
        case Algorithm::SvdPlusPlus: return "svdpp";
    }
    return "unknown";
}

inline Algorithm parse_algorithm(std::string_view name) {
    for (Algorithm a : kAllAlgorithms) {
        if (to_string(a) == name) return a;
    }
    throw ConfigError("unknown algorithm '" + std::string(name) +
                      "' (expected most-popular, random, user-knn, item-knn, biased-mf or svdpp)");
}

/// How KNN models rank candidates in top-N lists.
enum class KnnRanking {
    /// Mean-centred weighted neighbour average (the predicted rating).
    PredictedRating,
    /// Sum of similarities of the supporting neighbours.
    SimilaritySum,
};

inline std::string_view to_string(KnnRanking r) {
    return r == KnnRanking::PredictedRating ? "rating" : "similarity";
}

inline KnnRanking parse_knn_ranking(std::string_view name) {
    if (name == "rating") return KnnRanking::PredictedRating;
    if (name == "similarity") return KnnRanking::SimilaritySum;
    throw ConfigError("unknown knn ranking '" + std::string(name) + "' (expected rating or similarity)");
}

/// How the MF-family SGD applies L2 regularization.
enum class RegularizationScaling {
    /// Full penalty at every rating a parameter takes part in (the penalty
    /// grows with the entity's rating count).
    PerRating,
    /// Penalty divided by the entity's rating count, so each parameter is
    /// penalized once per epoch regardless of popularity.
    PerEntity,
};

inline std::string_view to_string(RegularizationScaling r) {
    return r == RegularizationScaling::PerRating ? "per-rating" : "per-entity";
}

inline RegularizationScaling parse_regularization_scaling(std::string_view name) {
    if (name == "per-rating") return RegularizationScaling::PerRating;
    if (name == "per-entity") return RegularizationScaling::PerEntity;
    throw ConfigError("unknown regularization scaling '" + std::string(name) + "' (expected per-rating or per-entity)");
}

struct AlgorithmConfig {
    Algorithm algorithm = Algorithm::MostPopular;
    std::size_t k = 50;
    std::size_t factors = 50;
    double learning_rate = 0.005;
    double regularization = 0.02;
    /// L2 weight on user/item biases; negative means "same as regularization".
    double bias_regularization = -1.0;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    std::size_t top_n = 10;
    /// KNN: pairs with fewer co-rated entries get similarity 0.
    std::size_t min_overlap = 3;
    /// KNN: similarity damping n / (n + shrinkage) for an overlap of n.
    double shrinkage = 0.0;
    KnnRanking knn_ranking = KnnRanking::PredictedRating;
    RegularizationScaling regularization_scaling = RegularizationScaling::PerRating;
    /// MF family: factors start uniform in (-init_scale, init_scale).
    double init_scale = 0.01;

    double bias_reg() const { return bias_regularization < 0.0 ? regularization : bias_regularization; }

    void validate() const {
        if (k < 1) throw ConfigError("k must be >= 1");
        if (factors < 1) throw ConfigError("factors must be >= 1");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (top_n < 1) throw ConfigError("top_n must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (!(regularization >= 0.0)) throw ConfigError("regularization must be >= 0");
        if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
        if (min_overlap < 1) throw ConfigError("min_overlap must be >= 1");
        if (!(shrinkage >= 0.0)) throw ConfigError("shrinkage must be >= 0");
    }
};

}  // namespace popbias
