#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "pgmn/train.hpp"

namespace pgmn {

enum class ImputationStrategy { nearest_neighbor, linear_interpolation, historical_averaging, neighbor_mean_or_zero };

inline std::string to_string(ImputationStrategy s)
{
    switch (s) {
    case ImputationStrategy::nearest_neighbor: return "nearest_neighbor";
    case ImputationStrategy::linear_interpolation: return "linear_interpolation";
    case ImputationStrategy::historical_averaging: return "historical_averaging";
    case ImputationStrategy::neighbor_mean_or_zero: return "neighbor_mean_or_zero";
    }
    return "unknown";
}

inline ImputationStrategy imputation_from_string(const std::string& s)
{
    for (auto k : {ImputationStrategy::nearest_neighbor, ImputationStrategy::linear_interpolation,
                   ImputationStrategy::historical_averaging, ImputationStrategy::neighbor_mean_or_zero}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown imputation strategy '" + s + "'");
}

struct SplitSpec {
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;

    void validate() const
    {
        if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(test_frac > 0.0)) {
            throw std::invalid_argument("SplitSpec: fractions must be positive");
        }
        if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
            throw std::invalid_argument("SplitSpec: fractions must sum to 1");
        }
    }
};

enum class TruthMode { full, sparse, absent };

struct ScenarioConfig {
    int id = 1;
    bool dl_available = true;
    bool ep_available = true;
    TruthMode truth_mode = TruthMode::full;
    double sparse_frac = 0.0;
    ImputationStrategy imputation = ImputationStrategy::linear_interpolation;
    SplitSpec split;
    TrainConfig train;
    bool memory_unit_enabled = true;
    std::uint64_t seed = 42;

    /// The five evaluation settings: both sources, sparse actuals, no actuals
    /// (new building), physics only, data-driven only.
    static ScenarioConfig preset(int id)
    {
        ScenarioConfig c;
        c.id = id;
        switch (id) {
        case 1: break;
        case 2:
            c.truth_mode = TruthMode::sparse;
            c.sparse_frac = 0.2;
            break;
        case 3:
            c.dl_available = false;
            c.truth_mode = TruthMode::absent;
            break;
        case 4: c.dl_available = false; break;
        case 5: c.ep_available = false; break;
        default: throw std::invalid_argument("scenario id must be 1..5, got " + std::to_string(id));
        }
        return c;
    }

    void validate() const
    {
        const ScenarioConfig ref = preset(id);
        if (dl_available != ref.dl_available || ep_available != ref.ep_available || truth_mode != ref.truth_mode) {
            throw std::invalid_argument("scenario " + std::to_string(id)
                                        + ": availability flags or truth mode inconsistent with scenario id");
        }
        if (truth_mode == TruthMode::sparse && !(sparse_frac > 0.0 && sparse_frac < 1.0)) {
            throw std::invalid_argument("scenario " + std::to_string(id) + ": sparse fraction must be in (0,1)");
        }
        split.validate();
        train.validate();
    }
};

} // namespace pgmn
