#include "emfleet/represent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "emfleet/ecod.hpp"
#include "emfleet/errors.hpp"

namespace emfleet {

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

GroupInfo group_of(const SampleRecord& r, GroupBy group_by) {
    switch (group_by) {
        case GroupBy::workload:
            return {r.workload_id, r.workload_id, r.generation, r.workload_class};
        case GroupBy::workload_generation:
            return {r.workload_id + "|" + r.generation, r.workload_id, r.generation,
                    r.workload_class};
        case GroupBy::workload_class:
            return {r.workload_class, "", r.generation, r.workload_class};
    }
    throw ValidationError("bad GroupBy");
}

}  // namespace

GroupBy group_by_from_string(const std::string& name) {
    if (name == "workload") return GroupBy::workload;
    if (name == "workload-generation") return GroupBy::workload_generation;
    if (name == "class") return GroupBy::workload_class;
    throw ValidationError("unknown grouping '" + name +
                          "' (expected workload, workload-generation or class)");
}

Matrix per_step_scores(const FleetDataset& class_dataset) {
    if (class_dataset.n() < 2)
        throw ValidationError("per-step scoring needs at least 2 samples, got " +
                              std::to_string(class_dataset.n()));
    // ECOD dimensions are independent, so the per-dimension auto scores of a
    // joint fit equal the scores of d separate univariate fits.
    const EcodModel model = EcodModel::fit(class_dataset);
    Matrix scores(class_dataset.n(), std::vector<double>(class_dataset.d, 0.0));
    for (std::size_t i = 0; i < class_dataset.n(); ++i) {
        const SampleScore s = model.score_sample(class_dataset.records[i].steps);
        for (std::size_t j = 0; j < class_dataset.d; ++j)
            scores[i][j] = s.dims[j].auto_score;
    }
    return scores;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty sequence");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

WorkloadFeatureMatrix compress_medians(const Matrix& scores,
                                       const std::vector<GroupInfo>& assignment) {
    if (scores.size() != assignment.size())
        throw DimensionError("score rows (" + std::to_string(scores.size()) +
                             ") != group assignments (" + std::to_string(assignment.size()) +
                             ")");
    std::map<GroupInfo, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        members[assignment[i]].push_back(i);

    const std::size_t d = scores.empty() ? 0 : scores.front().size();
    WorkloadFeatureMatrix out;
    for (const auto& [group, rows] : members) {
        if (rows.size() < 2)
            throw ConstraintError("group '" + group.key + "' has only " +
                                  std::to_string(rows.size()) + " sample(s); need >= 2");
        std::vector<double> medians(d);
        std::vector<double> column(rows.size());
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = 0; k < rows.size(); ++k) column[k] = scores[rows[k]][j];
            medians[j] = median(column);
        }
        out.groups.push_back(group);
        out.values.push_back(std::move(medians));
    }
    return out;
}

WorkloadFeatureMatrix build_feature_matrix(const FleetDataset& dataset,
                                           std::int64_t checkpoint, GroupBy group_by) {
    std::vector<SampleRecord> at_checkpoint;
    for (const SampleRecord& r : dataset.records)
        if (r.checkpoint == checkpoint) at_checkpoint.push_back(r);
    if (at_checkpoint.empty())
        throw LookupError("no records at checkpoint " + std::to_string(checkpoint));
    FleetDataset snapshot = make_dataset(std::move(at_checkpoint), dataset.provenance);

    WorkloadFeatureMatrix out;
    for (const auto& [cls, class_ds] : partition_by_class(snapshot)) {
        const Matrix scores = per_step_scores(class_ds);
        std::vector<GroupInfo> assignment;
        assignment.reserve(class_ds.n());
        for (const SampleRecord& r : class_ds.records)
            assignment.push_back(group_of(r, group_by));
        WorkloadFeatureMatrix part = compress_medians(scores, assignment);
        for (std::size_t i = 0; i < part.groups.size(); ++i) {
            out.groups.push_back(part.groups[i]);
            out.values.push_back(std::move(part.values[i]));
        }
    }
    // Classes arrive in map order; re-sort rows globally by group key.
    std::vector<std::size_t> order(out.groups.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.groups[a].key < out.groups[b].key;
    });
    WorkloadFeatureMatrix sorted;
    for (const std::size_t i : order) {
        sorted.groups.push_back(out.groups[i]);
        sorted.values.push_back(std::move(out.values[i]));
    }
    return sorted;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("pearson: length mismatch");
    if (x.size() < 2) throw ValidationError("pearson: need at least 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nan("");
    return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // average tied rank
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(ranks(x), ranks(y));
}

std::vector<AxisMatch> axis_correlation(
    const Matrix& embedding,
    const std::vector<std::pair<std::string, std::vector<double>>>& axes) {
    const std::size_t rows = embedding.size();
    const std::size_t k = rows == 0 ? 0 : embedding.front().size();
    std::vector<AxisMatch> out;
    for (const auto& [name, axis] : axes) {
        if (axis.size() != rows)
            throw DimensionError("axis '" + name + "' has " + std::to_string(axis.size()) +
                                 " labels for " + std::to_string(rows) + " embedding rows");
        AxisMatch match;
        match.axis = name;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> pc(rows);
            for (std::size_t i = 0; i < rows; ++i) pc[i] = embedding[i][c];
            const double r = pearson(axis, pc);
            if (std::isnan(r)) continue;
            if (!match.defined || std::abs(r) > match.correlation) {
                match.defined = true;
                match.best_pc = c + 1;
                match.correlation = std::abs(r);
            }
        }
        out.push_back(std::move(match));
    }
    return out;
}

std::string feature_matrix_csv(const WorkloadFeatureMatrix& matrix) {
    const std::size_t d = matrix.values.empty() ? 0 : matrix.values.front().size();
    std::string out = "group_key,generation,workload_class";
    for (std::size_t j = 0; j < d; ++j) out += ",step_" + std::to_string(j);
    out += '\n';
    for (std::size_t i = 0; i < matrix.groups.size(); ++i) {
        out += matrix.groups[i].key + ',' + matrix.groups[i].generation + ',' +
               matrix.groups[i].workload_class;
        for (const double v : matrix.values[i]) {
            out += ',';
            out += fmt_g(v);
        }
        out += '\n';
    }
    return out;
}

std::string scree_csv(const std::vector<ScreeEntry>& entries) {
    std::string out = "component,ratio,cumulative\n";
    for (const ScreeEntry& e : entries)
        out += std::to_string(e.component) + ',' + fmt_g(e.ratio) + ',' + fmt_g(e.cumulative) +
               '\n';
    return out;
}

std::string embedding_csv(const WorkloadFeatureMatrix& matrix, const Matrix& coords) {
    if (matrix.groups.size() != coords.size())
        throw DimensionError("embedding rows != group rows");
    const std::size_t k = coords.empty() ? 0 : coords.front().size();
    std::string out = "group_key,generation,workload_class";
    for (std::size_t c = 1; c <= k; ++c) out += ",pc" + std::to_string(c);
    out += '\n';
    for (std::size_t i = 0; i < coords.size(); ++i) {
        out += matrix.groups[i].key + ',' + matrix.groups[i].generation + ',' +
               matrix.groups[i].workload_class;
        for (const double v : coords[i]) {
            out += ',';
            out += fmt_g(v);
        }
        out += '\n';
    }
    return out;
}

std::string axis_table_csv(const std::vector<AxisMatch>& matches) {
    std::string out = "axis,best_pc,abs_correlation,defined\n";
    for (const AxisMatch& m : matches) {
        out += m.axis + ',';
        out += m.defined ? std::to_string(m.best_pc) : "";
        out += ',';
        out += m.defined ? fmt_g(m.correlation) : "undefined";
        out += ',';
        out += m.defined ? "true" : "false";
        out += '\n';
    }
    return out;
}

}  // namespace emfleet
