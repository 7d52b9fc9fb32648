// popbias_synth: writes a synthetic ratings file (user::item::rating::timestamp)
// for trying the pipeline without a real dataset.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "popbias/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic explicit-feedback ratings file"};
    popbias::SyntheticOptions opt;
    std::string out = "synthetic.dat";
    app.add_option("--out", out, "output path (ml1m format)");
    app.add_option("--users", opt.users, "number of users");
    app.add_option("--items", opt.items, "number of items");
    app.add_option("--activity-median", opt.activity_median, "median ratings per user above the minimum");
    app.add_option("--min-profile", opt.min_profile, "minimum ratings per user");
    app.add_option("--seed", opt.seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    const auto ratings = popbias::generate_ratings(opt);
    std::ofstream f(out, std::ios::binary);
    if (!f) {
        std::cerr << "error: cannot write " << out << "\n";
        return 2;
    }
    for (const auto& r : ratings) {
        f << r.user << "::" << r.item << "::" << static_cast<int>(r.value) << "::" << r.timestamp << "\n";
    }
    std::cout << ratings.size() << " ratings written to " << out << "\n";
    return 0;
}
