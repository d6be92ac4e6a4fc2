#ifndef EMFLEET_SCORING_HPP
#define EMFLEET_SCORING_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emfleet/ecod.hpp"
#include "emfleet/telemetry.hpp"

namespace emfleet {

// One workload class at one checkpoint, scored transductively.
struct ScoredPopulation {
    std::string workload_class;
    std::int64_t checkpoint = 0;
    Threshold threshold;
    // Ascending percentile list; always contains 0.999, which anchors the
    // causal-steps rule. percentile_table[p][j] is the nearest-rank
    // (ceil(p*n)-th order statistic) quantile of step j's auto scores.
    std::vector<double> percentiles;
    std::vector<std::vector<double>> percentile_table;
    std::vector<SampleScore> scores;                    // input order
    std::vector<std::pair<std::string, bool>> flags;    // aligned with scores

    std::size_t n() const { return scores.size(); }
    std::size_t d() const { return scores.empty() ? 0 : scores.front().dims.size(); }
    const std::vector<double>& percentile_row(double percentile) const;
};

// Fits an ECOD model on the class population (transductive), scores every
// record, flags by threshold and computes the per-step percentile table.
// Requires >= 2 records all sharing one workload_class and checkpoint.
// A non-null frozen model skips the fit and scores inductively against it
// (DimensionError on shape mismatch).
ScoredPopulation score_class(const FleetDataset& class_dataset, const Threshold& threshold,
                             std::vector<double> percentiles = {0.99, 0.999},
                             const EcodModel* frozen = nullptr);

struct ExtrinsicReport {
    std::string sample_id;
    double aggregate = 0.0;
    std::size_t rank = 0;  // 1-based, aggregate descending, sample_id tiebreak
    bool flagged = false;
    std::vector<DimensionScore> dims;
    std::vector<double> percentiles;
    std::vector<std::vector<double>> percentile_table;
    // Exactly the steps whose auto score strictly exceeds the population
    // 99.9th-percentile entry for that step.
    std::vector<std::size_t> causal_steps;
};

// Top-k by aggregate descending (sample_id ascending on ties). k > n returns
// n reports.
std::vector<ExtrinsicReport> rank_extrinsic(const ScoredPopulation& scored, std::size_t k);

// Report for one sample; throws LookupError when absent.
ExtrinsicReport explain_sample(const ScoredPopulation& scored, const std::string& sample_id);

struct CheckpointEntry {
    std::int64_t checkpoint = 0;
    double score = 0.0;
    std::size_t rank = 0;
    bool flagged = false;
};

struct ConsistencyReport {
    std::string sample_id;
    std::vector<CheckpointEntry> entries;  // checkpoint ascending
    bool consistent = false;               // flagged at every checkpoint
};

// The sample must appear in every supplied population (LookupError otherwise).
ConsistencyReport checkpoint_consistency(const std::vector<const ScoredPopulation*>& checkpoints,
                                         const std::string& sample_id);

struct Histogram {
    std::vector<double> edges;        // bin_count + 1 edges spanning [0, max]
    std::vector<double> percentages;  // sums to 100
};

Histogram score_histogram(const ScoredPopulation& scored, std::size_t bin_count);

nlohmann::json to_json(const ScoredPopulation& scored);
ScoredPopulation scored_population_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExtrinsicReport& report);
nlohmann::json to_json(const ConsistencyReport& report);

std::string histogram_csv(const Histogram& histogram);
std::string percentile_table_csv(const ScoredPopulation& scored);

}  // namespace emfleet

#endif  // EMFLEET_SCORING_HPP
