#include "emfleet/ecod.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emfleet/errors.hpp"

namespace emfleet {

using nlohmann::json;

namespace {

double sample_skewness(const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double m2 = 0.0;
    double m3 = 0.0;
    for (const double v : values) {
        const double dv = v - mean;
        m2 += dv * dv;
        m3 += dv * dv * dv;
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0) return 0.0;  // zero-variance convention
    const double g = m3 / std::pow(m2, 1.5);
    if (!std::isfinite(g)) return 0.0;
    return g;
}

}  // namespace

EcodModel EcodModel::fit(const std::vector<EmStepVector>& rows) {
    if (rows.size() < 2)
        throw ValidationError("ECOD fit needs a population of at least 2 samples, got " +
                              std::to_string(rows.size()));
    const std::size_t d = rows.front().size();
    if (d < 1) throw ValidationError("ECOD fit needs at least 1 dimension");
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].size() != d)
            throw DimensionError("row " + std::to_string(i) + " has dimension " +
                                 std::to_string(rows[i].size()) + ", expected " +
                                 std::to_string(d));

    EcodModel model;
    model.n_ = rows.size();
    model.sorted_.resize(d);
    model.skew_.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double>& col = model.sorted_[j];
        col.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            col[i] = static_cast<double>(rows[i][j]);
        model.skew_[j] = sample_skewness(col);
        std::sort(col.begin(), col.end());
    }
    return model;
}

EcodModel EcodModel::fit(const FleetDataset& dataset) {
    std::vector<EmStepVector> rows;
    rows.reserve(dataset.n());
    for (const SampleRecord& r : dataset.records) rows.push_back(r.steps);
    return fit(rows);
}

double EcodModel::skewness(std::size_t step) const {
    if (step >= d()) throw DimensionError("step index " + std::to_string(step) + " out of range");
    return skew_[step];
}

const std::vector<double>& EcodModel::sorted_values(std::size_t step) const {
    if (step >= d()) throw DimensionError("step index " + std::to_string(step) + " out of range");
    return sorted_[step];
}

std::pair<double, double> EcodModel::tail_probs(std::size_t step, double x) const {
    if (n_ == 0) throw ValidationError("model is not fitted");
    if (step >= d()) throw DimensionError("step index " + std::to_string(step) + " out of range");
    const std::vector<double>& col = sorted_[step];
    const double n = static_cast<double>(n_);
    const auto le = std::upper_bound(col.begin(), col.end(), x) - col.begin();
    const auto ge = col.end() - std::lower_bound(col.begin(), col.end(), x);
    return {static_cast<double>(le) / n, static_cast<double>(ge) / n};
}

SampleScore EcodModel::score_sample(const EmStepVector& steps, std::string sample_id) const {
    if (steps.size() != d())
        throw DimensionError("sample dimension " + std::to_string(steps.size()) +
                             " != model dimension " + std::to_string(d()));
    const double floor = 1.0 / (2.0 * static_cast<double>(n_));
    SampleScore out;
    out.sample_id = std::move(sample_id);
    out.dims.resize(steps.size());
    double sum_left = 0.0;
    double sum_right = 0.0;
    double sum_auto = 0.0;
    for (std::size_t j = 0; j < steps.size(); ++j) {
        const auto [p_left, p_right] = tail_probs(j, static_cast<double>(steps[j]));
        DimensionScore& ds = out.dims[j];
        ds.step_index = j;
        ds.left = -std::log(std::max(p_left, floor));
        ds.right = -std::log(std::max(p_right, floor));
        ds.auto_score = skew_[j] < 0.0 ? ds.left : ds.right;
        sum_left += ds.left;
        sum_right += ds.right;
        sum_auto += ds.auto_score;
    }
    out.aggregate = std::max({sum_left, sum_right, sum_auto});
    return out;
}

std::vector<SampleScore> EcodModel::score_population(const FleetDataset& dataset) const {
    if (dataset.n() > 0 && dataset.d != d())
        throw DimensionError("dataset dimension " + std::to_string(dataset.d) +
                             " != model dimension " + std::to_string(d()));
    // Dimension-major pass: one sorted column stays cache-hot across all
    // rows, which keeps the cost linear in n and d for fleet-sized inputs.
    // Produces exactly score_sample(row) per record.
    std::vector<SampleScore> out(dataset.n());
    const double floor = 1.0 / (2.0 * static_cast<double>(n_));
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        out[i].sample_id = dataset.records[i].sample_id;
        out[i].dims.resize(d());
    }
    std::vector<double> sum_left(dataset.n(), 0.0);
    std::vector<double> sum_right(dataset.n(), 0.0);
    std::vector<double> sum_auto(dataset.n(), 0.0);
    for (std::size_t j = 0; j < d(); ++j) {
        const bool left_tail = skew_[j] < 0.0;
        for (std::size_t i = 0; i < dataset.n(); ++i) {
            const auto [p_left, p_right] =
                tail_probs(j, static_cast<double>(dataset.records[i].steps[j]));
            DimensionScore& ds = out[i].dims[j];
            ds.step_index = j;
            ds.left = -std::log(std::max(p_left, floor));
            ds.right = -std::log(std::max(p_right, floor));
            ds.auto_score = left_tail ? ds.left : ds.right;
            sum_left[i] += ds.left;
            sum_right[i] += ds.right;
            sum_auto[i] += ds.auto_score;
        }
    }
    for (std::size_t i = 0; i < dataset.n(); ++i)
        out[i].aggregate = std::max({sum_left[i], sum_right[i], sum_auto[i]});
    return out;
}

json EcodModel::to_json() const {
    json doc;
    doc["format_version"] = 1;
    doc["n"] = n_;
    doc["d"] = d();
    doc["skewness"] = skew_;
    doc["sorted"] = sorted_;
    return doc;
}

EcodModel EcodModel::from_json(const json& doc) {
    try {
        if (doc.at("format_version").get<int>() != 1)
            throw ParseError("unsupported model format_version");
        EcodModel model;
        model.n_ = doc.at("n").get<std::size_t>();
        model.skew_ = doc.at("skewness").get<std::vector<double>>();
        model.sorted_ = doc.at("sorted").get<std::vector<std::vector<double>>>();
        if (model.sorted_.size() != model.skew_.size() ||
            model.sorted_.size() != doc.at("d").get<std::size_t>())
            throw ValidationError("model artifact dimensions are inconsistent");
        for (const auto& col : model.sorted_)
            if (col.size() != model.n_)
                throw ValidationError("model artifact column length != n");
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad model artifact: ") + e.what());
    }
}

Threshold Threshold::contamination(double fraction) {
    if (!(fraction > 0.0 && fraction <= 0.5))
        throw ValidationError("contamination must be in (0, 0.5], got " +
                              std::to_string(fraction));
    return {Mode::contamination, fraction};
}

Threshold Threshold::absolute(double score) {
    if (!(score >= 0.0))
        throw ValidationError("absolute threshold must be >= 0, got " + std::to_string(score));
    return {Mode::absolute_score, score};
}

std::vector<std::pair<std::string, bool>> flag(const std::vector<SampleScore>& scores,
                                               const Threshold& threshold) {
    std::vector<std::pair<std::string, bool>> out;
    out.reserve(scores.size());
    if (threshold.mode == Threshold::Mode::absolute_score) {
        for (const SampleScore& s : scores)
            out.emplace_back(s.sample_id, s.aggregate >= threshold.value);
        return out;
    }
    if (!(threshold.value > 0.0 && threshold.value <= 0.5))
        throw ValidationError("contamination must be in (0, 0.5]");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].aggregate != scores[b].aggregate)
            return scores[a].aggregate > scores[b].aggregate;
        return scores[a].sample_id < scores[b].sample_id;
    });
    const std::size_t flagged = scores.empty()
        ? 0
        : static_cast<std::size_t>(
              std::ceil(threshold.value * static_cast<double>(scores.size())));
    std::vector<bool> mark(scores.size(), false);
    for (std::size_t i = 0; i < std::min(flagged, order.size()); ++i) mark[order[i]] = true;
    for (std::size_t i = 0; i < scores.size(); ++i)
        out.emplace_back(scores[i].sample_id, mark[i]);
    return out;
}

}  // namespace emfleet
