#pragma once

// Evaluation metrics: accuracy, MAE risk, and static calibration error.

#include "mgce/loss_core.hpp"

#include <vector>

namespace mgce {

struct SceConfig {
    int bins = 15;
};

// Fraction of samples whose argmax probability (ties toward the lowest
// index) equals the label.
double accuracy(const std::vector<ProbabilityVector>& probs,
                const std::vector<int>& labels);

// Mean of 1 - probs_i[label_i].
double mae_risk(const std::vector<ProbabilityVector>& probs,
                const std::vector<int>& labels);

// Static calibration error: per class, predictions are binned into
// equal-width confidence bins; the per-bin absolute gap between empirical
// frequency and mean confidence is sample-weighted and averaged over
// classes. The last bin is closed on the right.
double sce(const std::vector<ProbabilityVector>& probs,
           const std::vector<int>& labels, const SceConfig& cfg = {});

} // namespace mgce
