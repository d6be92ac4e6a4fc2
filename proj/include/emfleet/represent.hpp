#ifndef EMFLEET_REPRESENT_HPP
#define EMFLEET_REPRESENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "emfleet/pca.hpp"
#include "emfleet/telemetry.hpp"

namespace emfleet {

// Row-grouping key for the workload feature matrix.
enum class GroupBy { workload, workload_generation, workload_class };

GroupBy group_by_from_string(const std::string& name);

struct GroupInfo {
    std::string key;
    std::string workload_id;  // empty for class-level grouping
    std::string generation;
    std::string workload_class;

    bool operator==(const GroupInfo&) const = default;
    bool operator<(const GroupInfo& other) const { return key < other.key; }
};

// n x d matrix of univariate auto scores: column j comes from an ECOD fit on
// step j alone across the class population. Requires n >= 2.
Matrix per_step_scores(const FleetDataset& class_dataset);

struct WorkloadFeatureMatrix {
    std::vector<GroupInfo> groups;  // row labels, key ascending
    Matrix values;                  // rows x d, median per-step score
};

// Entry (w, j) = exact median (mean of the two central order statistics for
// even counts) of column j over group w. Groups with < 2 samples are
// rejected, naming the group.
WorkloadFeatureMatrix compress_medians(const Matrix& scores,
                                       const std::vector<GroupInfo>& assignment);

// Per-step scoring + median compression for every workload class of one
// checkpoint, assembled into a single feature matrix.
WorkloadFeatureMatrix build_feature_matrix(const FleetDataset& dataset,
                                           std::int64_t checkpoint, GroupBy group_by);

double median(std::vector<double> values);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct AxisMatch {
    std::string axis;
    std::size_t best_pc = 0;    // 1-based; 0 when undefined
    double correlation = 0.0;   // absolute Pearson correlation
    bool defined = false;       // false for zero-variance axes
};

// For each latent axis, the best-matching principal component of the
// embedding and its absolute correlation. Axis length must equal the row
// count of the embedding.
std::vector<AxisMatch> axis_correlation(
    const Matrix& embedding,
    const std::vector<std::pair<std::string, std::vector<double>>>& axes);

// Plot-ready CSV surrogates.
std::string feature_matrix_csv(const WorkloadFeatureMatrix& matrix);
std::string scree_csv(const std::vector<ScreeEntry>& entries);
std::string embedding_csv(const WorkloadFeatureMatrix& matrix, const Matrix& coords);
std::string axis_table_csv(const std::vector<AxisMatch>& matches);

}  // namespace emfleet

#endif  // EMFLEET_REPRESENT_HPP
