#pragma once

// Run configuration: defaults, JSON config files, and validation.
//
// Config file schema (every key optional):
//
//   {
//     "ratings": "ml-1m/ratings.dat",
//     "format": "ml1m" | "csv" | "tsv",
//     "out": "out",
//     "seed": 42,
//     "popular_quantile": 0.2,
//     "train_fraction": 0.8,
//     "top_n": 10,
//     "popularity_source": "train" | "full",
//     "relevance_threshold": null | 4.0,
//     "plot_cap": 1000,
//     "algorithms": [ "most-popular", { "name": "user-knn", "k": 50 }, ... ]
//   }
//
// Algorithm objects accept: name, k, factors, learning_rate, regularization,
// bias_regularization, regularization_scaling, epochs, min_overlap,
// shrinkage, knn_ranking, init_scale. Unspecified fields take the shipped
// defaults for that algorithm.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "popbias/algorithm.hpp"
#include "popbias/data.hpp"

namespace popbias {

enum class PopularitySource { Train, Full };

inline std::string_view to_string(PopularitySource s) { return s == PopularitySource::Train ? "train" : "full"; }

inline PopularitySource parse_popularity_source(std::string_view name) {
    if (name == "train") return PopularitySource::Train;
    if (name == "full") return PopularitySource::Full;
    throw ConfigError("unknown popularity source '" + std::string(name) + "' (expected train or full)");
}

/// Shipped hyperparameters per algorithm.
inline AlgorithmConfig default_algorithm_config(Algorithm a) {
    AlgorithmConfig c;
    c.algorithm = a;
    switch (a) {
        case Algorithm::MostPopular:
        case Algorithm::Random:
            break;
        case Algorithm::UserKnn:
            c.k = 50;
            c.min_overlap = 3;
            c.knn_ranking = KnnRanking::SimilaritySum;
            break;
        case Algorithm::ItemKnn:
            c.k = 200;
            c.min_overlap = 3;
            c.shrinkage = 100.0;
            c.knn_ranking = KnnRanking::SimilaritySum;
            break;
        case Algorithm::BiasedMf:
        case Algorithm::SvdPlusPlus:
            c.factors = 50;
            c.learning_rate = 0.01;
            c.regularization = 1.0;
            c.bias_regularization = 100.0;
            c.regularization_scaling = RegularizationScaling::PerEntity;
            c.epochs = 20;
            break;
    }
    return c;
}

struct RunConfig {
    std::filesystem::path ratings;
    RatingFormat format = RatingFormat::DoubleColon;
    std::filesystem::path out = "out";
    std::uint64_t seed = 42;
    double popular_quantile = 0.2;
    double train_fraction = 0.8;
    std::size_t top_n = 10;
    PopularitySource popularity_source = PopularitySource::Train;
    std::optional<double> relevance_threshold;
    /// Row cap for downsampled plot files.
    std::size_t plot_cap = 1000;
    std::vector<AlgorithmConfig> algorithms;

    RunConfig() {
        for (Algorithm a : kAllAlgorithms) algorithms.push_back(default_algorithm_config(a));
    }

    void validate() const {
        if (!(popular_quantile > 0.0 && popular_quantile < 1.0)) throw ConfigError("popular quantile must lie in (0, 1)");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
        if (top_n < 1) throw ConfigError("top_n must be >= 1");
        if (plot_cap < 1) throw ConfigError("plot_cap must be >= 1");
        if (algorithms.empty()) throw ConfigError("algorithm list is empty");
        for (std::size_t a = 0; a < algorithms.size(); ++a) {
            algorithms[a].validate();
            for (std::size_t b = 0; b < a; ++b) {
                if (algorithms[a].algorithm == algorithms[b].algorithm) {
                    throw ConfigError("algorithm '" + std::string(to_string(algorithms[a].algorithm)) + "' listed twice");
                }
            }
        }
    }

    const AlgorithmConfig* find(Algorithm a) const {
        for (const auto& c : algorithms) {
            if (c.algorithm == a) return &c;
        }
        return nullptr;
    }
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace detail

inline AlgorithmConfig algorithm_config_from_json(const nlohmann::json& j) {
    if (j.is_string()) return default_algorithm_config(parse_algorithm(j.get<std::string>()));
    if (!j.is_object() || !j.contains("name")) throw ConfigError("algorithm entries must be a name or an object with \"name\"");
    AlgorithmConfig c = default_algorithm_config(parse_algorithm(j.at("name").get<std::string>()));
    detail::read_opt(j, "k", c.k);
    detail::read_opt(j, "factors", c.factors);
    detail::read_opt(j, "learning_rate", c.learning_rate);
    detail::read_opt(j, "regularization", c.regularization);
    detail::read_opt(j, "bias_regularization", c.bias_regularization);
    detail::read_opt(j, "epochs", c.epochs);
    detail::read_opt(j, "min_overlap", c.min_overlap);
    detail::read_opt(j, "shrinkage", c.shrinkage);
    detail::read_opt(j, "init_scale", c.init_scale);
    if (j.contains("knn_ranking")) c.knn_ranking = parse_knn_ranking(j.at("knn_ranking").get<std::string>());
    if (j.contains("regularization_scaling")) {
        c.regularization_scaling = parse_regularization_scaling(j.at("regularization_scaling").get<std::string>());
    }
    return c;
}

inline nlohmann::json to_json(const AlgorithmConfig& c) {
    return {{"name", to_string(c.algorithm)},
            {"k", c.k},
            {"factors", c.factors},
            {"learning_rate", c.learning_rate},
            {"regularization", c.regularization},
            {"bias_regularization", c.bias_reg()},
            {"regularization_scaling", to_string(c.regularization_scaling)},
            {"epochs", c.epochs},
            {"min_overlap", c.min_overlap},
            {"shrinkage", c.shrinkage},
            {"knn_ranking", to_string(c.knn_ranking)},
            {"init_scale", c.init_scale},
            {"seed", c.seed},
            {"top_n", c.top_n}};
}

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json algos = nlohmann::json::array();
    for (const auto& a : c.algorithms) algos.push_back(to_json(a));
    return {{"ratings", c.ratings.generic_string()},
            {"format", to_string(c.format)},
            {"out", c.out.generic_string()},
            {"seed", c.seed},
            {"popular_quantile", c.popular_quantile},
            {"train_fraction", c.train_fraction},
            {"top_n", c.top_n},
            {"popularity_source", to_string(c.popularity_source)},
            {"relevance_threshold", c.relevance_threshold ? nlohmann::json(*c.relevance_threshold) : nlohmann::json()},
            {"plot_cap", c.plot_cap},
            {"algorithms", algos}};
}

/// Applies the keys present in `j` on top of `base`.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {}) {
    try {
        if (!j.is_object()) throw ConfigError("config root must be an object");
        if (j.contains("ratings")) base.ratings = j.at("ratings").get<std::string>();
        if (j.contains("format")) base.format = parse_rating_format(j.at("format").get<std::string>());
        if (j.contains("out")) base.out = j.at("out").get<std::string>();
        detail::read_opt(j, "seed", base.seed);
        detail::read_opt(j, "popular_quantile", base.popular_quantile);
        detail::read_opt(j, "train_fraction", base.train_fraction);
        detail::read_opt(j, "top_n", base.top_n);
        detail::read_opt(j, "plot_cap", base.plot_cap);
        if (j.contains("popularity_source")) {
            base.popularity_source = parse_popularity_source(j.at("popularity_source").get<std::string>());
        }
        if (j.contains("relevance_threshold")) {
            const auto& t = j.at("relevance_threshold");
            base.relevance_threshold = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
        }
        if (j.contains("algorithms")) {
            base.algorithms.clear();
            for (const auto& a : j.at("algorithms")) base.algorithms.push_back(algorithm_config_from_json(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return base;
}

inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return run_config_from_json(j, std::move(base));
}

/// Restricts and reorders the algorithm list to `names`, keeping any
/// per-algorithm settings already present.
inline void select_algorithms(RunConfig& cfg, const std::vector<std::string>& names) {
    std::vector<AlgorithmConfig> chosen;
    for (const auto& n : names) {
        const Algorithm a = parse_algorithm(n);
        const AlgorithmConfig* existing = cfg.find(a);
        chosen.push_back(existing ? *existing : default_algorithm_config(a));
    }
    cfg.algorithms = std::move(chosen);
}

}  // namespace popbias
