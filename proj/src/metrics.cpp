#include "mgce/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace mgce {

namespace {

void check_lengths(const std::vector<ProbabilityVector>& probs,
                   const std::vector<int>& labels) {
    if (probs.size() != labels.size())
        throw std::invalid_argument("probs/labels length mismatch");
    if (probs.empty()) throw std::invalid_argument("empty metric input");
}

} // namespace

double accuracy(const std::vector<ProbabilityVector>& probs,
                const std::vector<int>& labels) {
    check_lengths(probs, labels);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (argmax_lowest(probs[i]) == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(probs.size());
}

double mae_risk(const std::vector<ProbabilityVector>& probs,
                const std::vector<int>& labels) {
    check_lengths(probs, labels);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        acc += 1.0 - probs[i][labels[i]];
    return acc / static_cast<double>(probs.size());
}

double sce(const std::vector<ProbabilityVector>& probs,
           const std::vector<int>& labels, const SceConfig& cfg) {
    check_lengths(probs, labels);
    if (cfg.bins < 1) throw std::invalid_argument("bins must be >= 1");
    const int k = static_cast<int>(probs.front().size());
    const int bins = cfg.bins;
    const double n = static_cast<double>(probs.size());

    double total = 0.0;
    std::vector<double> conf_sum(bins), freq_sum(bins);
    std::vector<std::size_t> count(bins);
    for (int c = 0; c < k; ++c) {
        std::fill(conf_sum.begin(), conf_sum.end(), 0.0);
        std::fill(freq_sum.begin(), freq_sum.end(), 0.0);
        std::fill(count.begin(), count.end(), std::size_t{0});
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const double p = probs[i][c];
            int b = static_cast<int>(p * bins);
            b = std::clamp(b, 0, bins - 1); // p == 1 lands in the last bin
            conf_sum[b] += p;
            freq_sum[b] += labels[i] == c ? 1.0 : 0.0;
            ++count[b];
        }
        for (int b = 0; b < bins; ++b) {
            if (count[b] == 0) continue;
            const double cnt = static_cast<double>(count[b]);
            total += (cnt / n) * std::abs(freq_sum[b] / cnt -
                                          conf_sum[b] / cnt);
        }
    }
    return total / static_cast<double>(k);
}

} // namespace mgce
