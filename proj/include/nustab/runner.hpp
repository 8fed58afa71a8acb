#pragma once

#include <string>

#include "nustab/config.hpp"

namespace nustab {

struct RunOutcome {
    int exit_code = 0; // 0 success, 3 numerical failure (2 is pre-run validation)
    std::string summary;
};

// Executes one validated experiment: writes the task's CSV/JSON artifacts
// under cfg.out_dir and returns the one-line summary.  Numerical exceptions
// propagate to the caller; a run that completes but violates one of its own
// mandatory checks returns exit_code 3.
RunOutcome run_experiment(const ExperimentConfig& cfg);

} // namespace nustab
