#include "emfleet/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "emfleet/errors.hpp"

namespace emfleet {

using nlohmann::json;

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// ceil(p*n)-th order statistic (1-based) of the given values.
double nearest_rank_quantile(std::vector<double> values, double p) {
    const std::size_t n = values.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
    return values[rank - 1];
}

std::vector<std::size_t> score_order(const std::vector<SampleScore>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].aggregate != scores[b].aggregate)
            return scores[a].aggregate > scores[b].aggregate;
        return scores[a].sample_id < scores[b].sample_id;
    });
    return order;
}

ExtrinsicReport build_report(const ScoredPopulation& scored, std::size_t index,
                             std::size_t rank) {
    const SampleScore& s = scored.scores[index];
    ExtrinsicReport rep;
    rep.sample_id = s.sample_id;
    rep.aggregate = s.aggregate;
    rep.rank = rank;
    rep.flagged = scored.flags[index].second;
    rep.dims = s.dims;
    rep.percentiles = scored.percentiles;
    rep.percentile_table = scored.percentile_table;
    const std::vector<double>& p999 = scored.percentile_row(0.999);
    for (std::size_t j = 0; j < s.dims.size(); ++j)
        if (s.dims[j].auto_score > p999[j]) rep.causal_steps.push_back(j);
    return rep;
}

}  // namespace

const std::vector<double>& ScoredPopulation::percentile_row(double percentile) const {
    for (std::size_t i = 0; i < percentiles.size(); ++i)
        if (percentiles[i] == percentile) return percentile_table[i];
    throw LookupError("percentile " + std::to_string(percentile) + " not in table");
}

ScoredPopulation score_class(const FleetDataset& class_dataset, const Threshold& threshold,
                             std::vector<double> percentiles, const EcodModel* frozen) {
    if (class_dataset.n() < 2)
        throw ValidationError("class population needs at least 2 records, got " +
                              std::to_string(class_dataset.n()));
    const SampleRecord& first = class_dataset.records.front();
    for (const SampleRecord& r : class_dataset.records) {
        if (r.workload_class != first.workload_class)
            throw ValidationError("mixed workload classes in one scoring population ('" +
                                  first.workload_class + "' vs '" + r.workload_class + "')");
        if (r.checkpoint != first.checkpoint)
            throw ValidationError("mixed checkpoints in one scoring population (" +
                                  std::to_string(first.checkpoint) + " vs " +
                                  std::to_string(r.checkpoint) + ")");
    }
    for (const double p : percentiles)
        if (!(p > 0.0 && p < 1.0))
            throw ValidationError("percentile must be in (0, 1), got " + std::to_string(p));
    if (std::find(percentiles.begin(), percentiles.end(), 0.999) == percentiles.end())
        percentiles.push_back(0.999);  // anchors the causal-steps rule
    std::sort(percentiles.begin(), percentiles.end());
    percentiles.erase(std::unique(percentiles.begin(), percentiles.end()), percentiles.end());

    ScoredPopulation scored;
    scored.workload_class = first.workload_class;
    scored.checkpoint = first.checkpoint;
    scored.threshold = threshold;
    scored.percentiles = percentiles;
    const EcodModel model = frozen ? *frozen : EcodModel::fit(class_dataset);
    if (frozen && model.d() != class_dataset.d)
        throw DimensionError("frozen model dimension " + std::to_string(model.d()) +
                             " != dataset dimension " + std::to_string(class_dataset.d));
    scored.scores = model.score_population(class_dataset);
    scored.flags = flag(scored.scores, threshold);

    const std::size_t d = model.d();
    scored.percentile_table.assign(percentiles.size(), std::vector<double>(d, 0.0));
    std::vector<double> column(scored.scores.size());
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < scored.scores.size(); ++i)
            column[i] = scored.scores[i].dims[j].auto_score;
        for (std::size_t p = 0; p < percentiles.size(); ++p)
            scored.percentile_table[p][j] = nearest_rank_quantile(column, percentiles[p]);
    }
    return scored;
}

std::vector<ExtrinsicReport> rank_extrinsic(const ScoredPopulation& scored, std::size_t k) {
    if (k < 1) throw ValidationError("k must be >= 1");
    const std::vector<std::size_t> order = score_order(scored.scores);
    const std::size_t count = std::min(k, order.size());
    std::vector<ExtrinsicReport> reports;
    reports.reserve(count);
    for (std::size_t r = 0; r < count; ++r)
        reports.push_back(build_report(scored, order[r], r + 1));
    return reports;
}

ExtrinsicReport explain_sample(const ScoredPopulation& scored, const std::string& sample_id) {
    const std::vector<std::size_t> order = score_order(scored.scores);
    for (std::size_t r = 0; r < order.size(); ++r)
        if (scored.scores[order[r]].sample_id == sample_id)
            return build_report(scored, order[r], r + 1);
    throw LookupError("sample '" + sample_id + "' not found in class '" +
                      scored.workload_class + "' checkpoint " +
                      std::to_string(scored.checkpoint));
}

ConsistencyReport checkpoint_consistency(const std::vector<const ScoredPopulation*>& checkpoints,
                                         const std::string& sample_id) {
    if (checkpoints.empty())
        throw ValidationError("checkpoint_consistency needs at least one population");
    ConsistencyReport rep;
    rep.sample_id = sample_id;
    rep.consistent = true;
    for (const ScoredPopulation* scored : checkpoints) {
        const std::vector<std::size_t> order = score_order(scored->scores);
        bool found = false;
        for (std::size_t r = 0; r < order.size(); ++r) {
            const std::size_t i = order[r];
            if (scored->scores[i].sample_id != sample_id) continue;
            CheckpointEntry entry;
            entry.checkpoint = scored->checkpoint;
            entry.score = scored->scores[i].aggregate;
            entry.rank = r + 1;
            entry.flagged = scored->flags[i].second;
            rep.entries.push_back(entry);
            rep.consistent = rep.consistent && entry.flagged;
            found = true;
            break;
        }
        if (!found)
            throw LookupError("sample '" + sample_id + "' missing from checkpoint " +
                              std::to_string(scored->checkpoint));
    }
    std::sort(rep.entries.begin(), rep.entries.end(),
              [](const CheckpointEntry& a, const CheckpointEntry& b) {
                  return a.checkpoint < b.checkpoint;
              });
    return rep;
}

Histogram score_histogram(const ScoredPopulation& scored, std::size_t bin_count) {
    if (bin_count < 1) throw ValidationError("bin_count must be >= 1");
    if (scored.scores.empty()) throw ValidationError("cannot histogram an empty population");
    double max_score = 0.0;
    for (const SampleScore& s : scored.scores) max_score = std::max(max_score, s.aggregate);
    // Degenerate all-zero population: keep a non-empty span.
    const double span = max_score > 0.0 ? max_score : 1.0;

    Histogram h;
    h.edges.resize(bin_count + 1);
    for (std::size_t b = 0; b <= bin_count; ++b)
        h.edges[b] = span * static_cast<double>(b) / static_cast<double>(bin_count);
    std::vector<std::size_t> counts(bin_count, 0);
    for (const SampleScore& s : scored.scores) {
        std::size_t b = static_cast<std::size_t>(
            std::floor(s.aggregate / span * static_cast<double>(bin_count)));
        if (b >= bin_count) b = bin_count - 1;  // max score lands in the top bin
        ++counts[b];
    }
    h.percentages.resize(bin_count);
    const double n = static_cast<double>(scored.scores.size());
    for (std::size_t b = 0; b < bin_count; ++b)
        h.percentages[b] = 100.0 * static_cast<double>(counts[b]) / n;
    return h;
}

namespace {

json threshold_to_json(const Threshold& t) {
    json doc;
    doc["mode"] = t.mode == Threshold::Mode::contamination ? "contamination" : "absolute";
    doc["value"] = t.value;
    return doc;
}

Threshold threshold_from_json(const json& doc) {
    const std::string mode = doc.at("mode").get<std::string>();
    const double value = doc.at("value").get<double>();
    return mode == "contamination" ? Threshold::contamination(value)
                                   : Threshold::absolute(value);
}

json dims_to_json(const std::vector<DimensionScore>& dims) {
    json arr = json::array();
    for (const DimensionScore& d : dims) {
        json e;
        e["step_index"] = d.step_index;
        e["left"] = d.left;
        e["right"] = d.right;
        e["auto"] = d.auto_score;
        arr.push_back(std::move(e));
    }
    return arr;
}

std::vector<DimensionScore> dims_from_json(const json& arr) {
    std::vector<DimensionScore> dims;
    dims.reserve(arr.size());
    for (const json& e : arr) {
        DimensionScore d;
        d.step_index = e.at("step_index").get<std::size_t>();
        d.left = e.at("left").get<double>();
        d.right = e.at("right").get<double>();
        d.auto_score = e.at("auto").get<double>();
        dims.push_back(d);
    }
    return dims;
}

}  // namespace

json to_json(const ScoredPopulation& scored) {
    json doc;
    doc["format_version"] = 1;
    doc["workload_class"] = scored.workload_class;
    doc["checkpoint"] = scored.checkpoint;
    doc["threshold"] = threshold_to_json(scored.threshold);
    doc["percentiles"] = scored.percentiles;
    doc["percentile_table"] = scored.percentile_table;
    json scores = json::array();
    for (std::size_t i = 0; i < scored.scores.size(); ++i) {
        const SampleScore& s = scored.scores[i];
        json e;
        e["sample_id"] = s.sample_id;
        e["aggregate"] = s.aggregate;
        e["flagged"] = scored.flags[i].second;
        e["dims"] = dims_to_json(s.dims);
        scores.push_back(std::move(e));
    }
    doc["scores"] = std::move(scores);
    return doc;
}

ScoredPopulation scored_population_from_json(const json& doc) {
    try {
        ScoredPopulation scored;
        scored.workload_class = doc.at("workload_class").get<std::string>();
        scored.checkpoint = doc.at("checkpoint").get<std::int64_t>();
        scored.threshold = threshold_from_json(doc.at("threshold"));
        scored.percentiles = doc.at("percentiles").get<std::vector<double>>();
        scored.percentile_table =
            doc.at("percentile_table").get<std::vector<std::vector<double>>>();
        for (const json& e : doc.at("scores")) {
            SampleScore s;
            s.sample_id = e.at("sample_id").get<std::string>();
            s.aggregate = e.at("aggregate").get<double>();
            s.dims = dims_from_json(e.at("dims"));
            scored.scores.push_back(std::move(s));
            scored.flags.emplace_back(scored.scores.back().sample_id,
                                      e.at("flagged").get<bool>());
        }
        return scored;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad scored-population document: ") + e.what());
    }
}

json to_json(const ExtrinsicReport& report) {
    json doc;
    doc["sample_id"] = report.sample_id;
    doc["aggregate"] = report.aggregate;
    doc["rank"] = report.rank;
    doc["flagged"] = report.flagged;
    doc["dims"] = dims_to_json(report.dims);
    doc["percentiles"] = report.percentiles;
    doc["percentile_table"] = report.percentile_table;
    doc["causal_steps"] = report.causal_steps;
    return doc;
}

json to_json(const ConsistencyReport& report) {
    json doc;
    doc["sample_id"] = report.sample_id;
    doc["consistent"] = report.consistent;
    json entries = json::array();
    for (const CheckpointEntry& e : report.entries) {
        json entry;
        entry["checkpoint"] = e.checkpoint;
        entry["score"] = e.score;
        entry["rank"] = e.rank;
        entry["flagged"] = e.flagged;
        entries.push_back(std::move(entry));
    }
    doc["checkpoints"] = std::move(entries);
    return doc;
}

std::string histogram_csv(const Histogram& histogram) {
    std::string out = "bin_low,bin_high,percent\n";
    for (std::size_t b = 0; b + 1 < histogram.edges.size(); ++b) {
        out += fmt_g(histogram.edges[b]);
        out += ',';
        out += fmt_g(histogram.edges[b + 1]);
        out += ',';
        out += fmt_g(histogram.percentages[b]);
        out += '\n';
    }
    return out;
}

std::string percentile_table_csv(const ScoredPopulation& scored) {
    std::string out = "step";
    for (const double p : scored.percentiles) out += ",p" + fmt_g(100.0 * p);
    out += '\n';
    for (std::size_t j = 0; j < scored.d(); ++j) {
        out += std::to_string(j);
        for (std::size_t p = 0; p < scored.percentiles.size(); ++p) {
            out += ',';
            out += fmt_g(scored.percentile_table[p][j]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace emfleet
