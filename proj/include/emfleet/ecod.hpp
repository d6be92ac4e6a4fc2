#ifndef EMFLEET_ECOD_HPP
#define EMFLEET_ECOD_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emfleet/telemetry.hpp"

namespace emfleet {

// Per-step outlier score decomposition. left/right are the negative logs of
// the empirical left/right tail probabilities; auto_score routes by the fit
// population's skewness (left tail when skewness < 0, right tail otherwise).
struct DimensionScore {
    std::size_t step_index = 0;
    double left = 0.0;
    double right = 0.0;
    double auto_score = 0.0;
};

struct SampleScore {
    std::string sample_id;
    double aggregate = 0.0;
    std::vector<DimensionScore> dims;
};

// Empirical-CDF outlier model: per-dimension sorted fit values plus
// per-dimension skewness. Immutable after fit; safe to share across threads.
class EcodModel {
public:
    // rows: n x d, n >= 2. Keeps sorted copies per dimension; the input is
    // not modified. Fit cost O(n log n * d).
    static EcodModel fit(const std::vector<EmStepVector>& rows);
    static EcodModel fit(const FleetDataset& dataset);

    std::size_t n() const { return n_; }
    std::size_t d() const { return sorted_.size(); }

    // Fisher-Pearson sample skewness (n in the denominator); exactly 0 for
    // zero-variance dimensions.
    double skewness(std::size_t step) const;

    const std::vector<double>& sorted_values(std::size_t step) const;

    // p_left = |{i : X_ij <= x}| / n, p_right = |{i : X_ij >= x}| / n,
    // via rank search on the sorted array.
    std::pair<double, double> tail_probs(std::size_t step, double x) const;

    // Tail probabilities are floored at 1/(2n) so out-of-support queries stay
    // finite; in-population values never hit the floor. aggregate is the max
    // of the left-only, right-only and skew-routed column sums.
    SampleScore score_sample(const EmStepVector& steps, std::string sample_id = {}) const;

    // Element i equals score_sample(record i); order matches input order.
    std::vector<SampleScore> score_population(const FleetDataset& dataset) const;

    // Single-document model artifact (sorted arrays, skewness, n, d).
    nlohmann::json to_json() const;
    static EcodModel from_json(const nlohmann::json& doc);

private:
    std::vector<std::vector<double>> sorted_;  // d arrays of n values
    std::vector<double> skew_;
    std::size_t n_ = 0;
};

struct Threshold {
    enum class Mode { contamination, absolute_score };
    Mode mode = Mode::contamination;
    double value = 0.01;

    // fraction in (0, 0.5]: flags the ceil(fraction * n) highest scores.
    static Threshold contamination(double fraction);
    // flags aggregate >= score.
    static Threshold absolute(double score);
};

// Deterministic flagging; contamination ties break by sample_id ascending.
std::vector<std::pair<std::string, bool>> flag(const std::vector<SampleScore>& scores,
                                               const Threshold& threshold);

}  // namespace emfleet

#endif  // EMFLEET_ECOD_HPP
