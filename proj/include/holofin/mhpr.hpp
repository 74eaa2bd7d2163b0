#pragma once

#include <string>
#include <vector>

#include "holofin/field.hpp"

namespace holofin {

// Configuration for iterative multi-height phase retrieval.
struct MhprConfig {
    int iterations = 100;
    bool record_residuals = false;
    // Optional plane visit order (indices into the stack). Empty means
    // ascending z, which is the default sweep order.
    std::vector<int> visit_order;

    void validate(int plane_count) const;
};

struct MhprResult {
    ComplexField field;  // sample-plane estimate
    // Mean RMS amplitude mismatch across planes, one entry per iteration
    // (empty unless record_residuals was set).
    std::vector<double> residuals;
};

// Iterative multi-height phase retrieval. Starts from the zero-phase
// back-propagation of the first (closest) hologram; each iteration sweeps the
// planes, replacing the propagated amplitude with the average of itself and
// the measured amplitude while keeping the propagated phase.
MhprResult mhpr_reconstruct(const HologramStack& stack, const MhprConfig& cfg);

// Writes a residual trace as CSV with an "iteration,residual" header.
void write_residuals_csv(const std::string& path, const std::vector<double>& residuals);

}  // namespace holofin
