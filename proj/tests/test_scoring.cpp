#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "emfleet/scoring.hpp"

using namespace emfleet;

namespace {

FleetDataset class_dataset(std::uint32_t seed, std::size_t n, std::size_t d,
                           const std::string& cls = "c0", std::int64_t checkpoint = 0) {
    std::mt19937 gen(seed);
    std::uniform_int_distribution<std::int64_t> count(0, 400);
    std::vector<SampleRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        SampleRecord r;
        char id[32];
        std::snprintf(id, sizeof(id), "dev-%04zu", i);
        r.sample_id = id;
        r.generation = "gen-a";
        r.workload_class = cls;
        r.workload_id = "w0";
        r.checkpoint = checkpoint;
        r.component_count = 2;
        r.steps.resize(d);
        for (auto& v : r.steps) v = count(gen);
        records.push_back(std::move(r));
    }
    return make_dataset(std::move(records));
}

// Independent nearest-rank quantile: full sort, take the ceil(p*n)-th order
// statistic (1-based).
double nearest_rank_oracle(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const std::size_t rank =
        static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
    return v[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

TEST_CASE("score_class composes fit + score + flag + percentiles") {
    const FleetDataset ds = class_dataset(1, 120, 5);
    const Threshold th = Threshold::contamination(0.05);
    const ScoredPopulation scored = score_class(ds, th, {0.9, 0.99});

    // scores equal a direct model fit on the same records, in input order
    const EcodModel model = EcodModel::fit(ds);
    const auto direct = model.score_population(ds);
    REQUIRE(scored.scores.size() == direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(scored.scores[i].sample_id == direct[i].sample_id);
        CHECK(scored.scores[i].aggregate == direct[i].aggregate);
    }

    // flags equal flag() on those scores
    const auto expect_flags = flag(direct, th);
    CHECK(scored.flags == expect_flags);

    // 0.999 is always appended; list sorted ascending
    REQUIRE(scored.percentiles.size() == 3);
    CHECK(scored.percentiles == std::vector<double>{0.9, 0.99, 0.999});
    CHECK(std::is_sorted(scored.percentiles.begin(), scored.percentiles.end()));

    // percentile table matches the sort-based nearest-rank oracle per step
    REQUIRE(scored.percentile_table.size() == 3);
    for (std::size_t p = 0; p < scored.percentiles.size(); ++p) {
        REQUIRE(scored.percentile_table[p].size() == ds.d);
        for (std::size_t j = 0; j < ds.d; ++j) {
            std::vector<double> column;
            for (const SampleScore& s : scored.scores)
                column.push_back(s.dims[j].auto_score);
            CHECK(scored.percentile_table[p][j] ==
                  doctest::Approx(nearest_rank_oracle(column, scored.percentiles[p])));
        }
    }
}

TEST_CASE("percentile rows are monotone in p") {
    const ScoredPopulation scored =
        score_class(class_dataset(2, 80, 4), Threshold::contamination(0.1), {0.5, 0.9, 0.99});
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t p = 1; p < scored.percentiles.size(); ++p)
            CHECK(scored.percentile_table[p][j] >= scored.percentile_table[p - 1][j]);
}

TEST_CASE("score_class rejects mixed or tiny populations") {
    FleetDataset mixed = class_dataset(3, 10, 3, "c0");
    FleetDataset other = class_dataset(4, 10, 3, "c1");
    for (auto& r : other.records) r.sample_id += "-b";
    mixed.records.insert(mixed.records.end(), other.records.begin(), other.records.end());
    mixed = make_dataset(std::move(mixed.records));
    CHECK_THROWS_AS(score_class(mixed, Threshold::contamination(0.1)), ValidationError);

    FleetDataset one = class_dataset(5, 1, 3);
    CHECK_THROWS_AS(score_class(one, Threshold::contamination(0.1)), ValidationError);
}

TEST_CASE("frozen model scores inductively and checks shape") {
    const FleetDataset train = class_dataset(6, 100, 4);
    const FleetDataset test = class_dataset(7, 30, 4);
    const EcodModel model = EcodModel::fit(train);
    const ScoredPopulation scored =
        score_class(test, Threshold::contamination(0.1), {0.99}, &model);
    // frozen scores come from the training model, not a refit
    for (std::size_t i = 0; i < test.n(); ++i)
        CHECK(scored.scores[i].aggregate ==
              model.score_sample(test.records[i].steps).aggregate);

    const FleetDataset wrong = class_dataset(8, 30, 6);
    CHECK_THROWS_AS(score_class(wrong, Threshold::contamination(0.1), {0.99}, &model),
                    DimensionError);
}

TEST_CASE("causal steps are exactly the strict 99.9th-percentile exceedances") {
    const ScoredPopulation scored =
        score_class(class_dataset(9, 200, 6), Threshold::contamination(0.05));
    const auto& p999 = scored.percentile_row(0.999);
    for (const SampleScore& s : scored.scores) {
        const ExtrinsicReport rep = explain_sample(scored, s.sample_id);
        std::set<std::size_t> causal(rep.causal_steps.begin(), rep.causal_steps.end());
        for (std::size_t j = 0; j < 6; ++j)
            CHECK(causal.count(j) == (s.dims[j].auto_score > p999[j] ? 1u : 0u));
    }
}

TEST_CASE("rank_extrinsic equals the sort-everything oracle") {
    const ScoredPopulation scored =
        score_class(class_dataset(10, 60, 3), Threshold::contamination(0.1));
    std::vector<std::pair<double, std::string>> order;
    for (const SampleScore& s : scored.scores) order.emplace_back(-s.aggregate, s.sample_id);
    std::sort(order.begin(), order.end());

    const auto top = rank_extrinsic(scored, 7);
    REQUIRE(top.size() == 7);
    for (std::size_t i = 0; i < top.size(); ++i) {
        CHECK(top[i].sample_id == order[i].second);
        CHECK(top[i].rank == i + 1);
    }
    CHECK(rank_extrinsic(scored, 1).front().sample_id == order.front().second);
    CHECK(rank_extrinsic(scored, 1000).size() == scored.n());  // k > n -> n reports
}

TEST_CASE("explain_sample agrees with rank_extrinsic and rejects unknown ids") {
    const ScoredPopulation scored =
        score_class(class_dataset(11, 40, 3), Threshold::contamination(0.1));
    const auto top = rank_extrinsic(scored, scored.n());
    for (const ExtrinsicReport& expect : top) {
        const ExtrinsicReport got = explain_sample(scored, expect.sample_id);
        CHECK(got.rank == expect.rank);
        CHECK(got.aggregate == expect.aggregate);
        CHECK(got.flagged == expect.flagged);
        CHECK(got.causal_steps == expect.causal_steps);
    }
    CHECK_THROWS_AS(explain_sample(scored, "missing"), LookupError);
}

TEST_CASE("checkpoint consistency definitions") {
    std::vector<ScoredPopulation> cps;
    for (std::int64_t cp = 0; cp < 3; ++cp)
        cps.push_back(score_class(class_dataset(20 + static_cast<std::uint32_t>(cp), 50, 4,
                                                "c0", cp),
                                  Threshold::contamination(0.1)));
    std::vector<const ScoredPopulation*> ptrs{&cps[0], &cps[1], &cps[2]};

    for (const SampleScore& s : cps[0].scores) {
        const ConsistencyReport rep = checkpoint_consistency(ptrs, s.sample_id);
        REQUIRE(rep.entries.size() == 3);
        bool all = true;
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(rep.entries[k].checkpoint == static_cast<std::int64_t>(k));
            const ExtrinsicReport e = explain_sample(cps[k], s.sample_id);
            CHECK(rep.entries[k].flagged == e.flagged);
            CHECK(rep.entries[k].score == e.aggregate);
            CHECK(rep.entries[k].rank == e.rank);
            all = all && e.flagged;
        }
        CHECK(rep.consistent == all);
    }

    // single checkpoint: consistent == that checkpoint's flag
    const ConsistencyReport solo =
        checkpoint_consistency({&cps[0]}, cps[0].scores.front().sample_id);
    CHECK(solo.consistent ==
          explain_sample(cps[0], cps[0].scores.front().sample_id).flagged);

    // sample missing from one checkpoint -> LookupError
    ScoredPopulation truncated = cps[2];
    truncated.scores.pop_back();
    truncated.flags.pop_back();
    std::vector<const ScoredPopulation*> broken{&cps[0], &cps[1], &truncated};
    CHECK_THROWS_AS(checkpoint_consistency(broken, cps[2].scores.back().sample_id),
                    LookupError);
}

TEST_CASE("histograms: normalization, span and counting") {
    const ScoredPopulation scored =
        score_class(class_dataset(30, 150, 5), Threshold::contamination(0.1));
    for (const std::size_t bins : {1u, 7u, 40u}) {
        const Histogram h = score_histogram(scored, bins);
        REQUIRE(h.percentages.size() == bins);
        REQUIRE(h.edges.size() == bins + 1);
        CHECK(std::accumulate(h.percentages.begin(), h.percentages.end(), 0.0) ==
              doctest::Approx(100.0).epsilon(1e-12));
        CHECK(h.edges.front() == 0.0);
        double max_agg = 0.0;
        for (const SampleScore& s : scored.scores) max_agg = std::max(max_agg, s.aggregate);
        CHECK(h.edges.back() == doctest::Approx(max_agg));
        CHECK(h.percentages.back() > 0.0);  // the max lands in the last bin
        // brute-force recount
        for (std::size_t b = 0; b < bins; ++b) {
            std::size_t count = 0;
            for (const SampleScore& s : scored.scores) {
                const bool in = s.aggregate >= h.edges[b] &&
                                (s.aggregate < h.edges[b + 1] || b == bins - 1);
                count += in;
            }
            CHECK(h.percentages[b] ==
                  doctest::Approx(100.0 * static_cast<double>(count) /
                                  static_cast<double>(scored.n())));
        }
    }
}

TEST_CASE("scored population JSON round-trips") {
    const ScoredPopulation scored =
        score_class(class_dataset(40, 25, 3), Threshold::contamination(0.2), {0.9});
    const ScoredPopulation copy = scored_population_from_json(to_json(scored));
    CHECK(copy.workload_class == scored.workload_class);
    CHECK(copy.checkpoint == scored.checkpoint);
    CHECK(copy.percentiles == scored.percentiles);
    CHECK(copy.percentile_table == scored.percentile_table);
    CHECK(copy.flags == scored.flags);
    REQUIRE(copy.scores.size() == scored.scores.size());
    for (std::size_t i = 0; i < copy.scores.size(); ++i) {
        CHECK(copy.scores[i].sample_id == scored.scores[i].sample_id);
        CHECK(copy.scores[i].aggregate == scored.scores[i].aggregate);
        REQUIRE(copy.scores[i].dims.size() == scored.scores[i].dims.size());
        for (std::size_t j = 0; j < copy.scores[i].dims.size(); ++j)
            CHECK(copy.scores[i].dims[j].auto_score == scored.scores[i].dims[j].auto_score);
    }
}

TEST_CASE("csv emitters are stable and well-formed") {
    const ScoredPopulation scored =
        score_class(class_dataset(50, 30, 3), Threshold::contamination(0.1));
    const Histogram h = score_histogram(scored, 10);
    CHECK(histogram_csv(h) == histogram_csv(h));
    const std::string csv = histogram_csv(h);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);  // header + 10 bins
    const std::string pct = percentile_table_csv(scored);
    CHECK(std::count(pct.begin(), pct.end(), '\n') == static_cast<long>(1 + scored.d()));
}
