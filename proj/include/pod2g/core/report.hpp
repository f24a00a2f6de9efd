#pragma once

#include <limits>

#include <json.hpp>

#include "pod2g/core/types.hpp"

namespace pod2g {

/// Outcome of one iterative solve. `cycles` counts multigrid cycles for the
/// stationary solvers and Krylov iterations for CG/PCG.
struct SolveReport {
    bool converged = false;
    index_t cycles = 0;
    std::vector<double> residual_history;  // relative residuals, includes the initial one
    double wall_time_s = 0.0;

    double final_residual() const {
        return residual_history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : residual_history.back();
    }
};

inline nlohmann::json to_json(const SolveReport& r) {
    return nlohmann::json{{"converged", r.converged},
                          {"cycles", r.cycles},
                          {"residual_history", r.residual_history},
                          {"wall_time_s", r.wall_time_s}};
}

}  // namespace pod2g
