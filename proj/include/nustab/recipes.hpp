#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nustab {

struct RecipeCheck {
    std::string name;
    double measured = 0.0;
    double lo = 0.0, hi = 0.0; // accepted closed interval
    bool pass = false;
};

struct RecipeResult {
    std::string recipe;
    std::vector<RecipeCheck> checks;
    std::vector<std::string> artifacts; // files written, relative to out_dir
    bool pass = false;
};

struct RecipeInfo {
    std::string name;
    std::string summary; // model, windows, expected exponents
};

// Golden end-to-end runs with pinned truncations, windows and expected
// exponent ranges.  Each writes its plot-ready CSVs into out_dir and returns
// the measured-versus-expected table.
const std::vector<RecipeInfo>& recipe_catalogue();

RecipeResult run_recipe(const std::string& name, const std::string& out_dir,
                        std::uint64_t seed);

std::string to_json(const RecipeResult& r);

} // namespace nustab
