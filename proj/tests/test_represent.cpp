#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <vector>

#include "emfleet/ecod.hpp"
#include "emfleet/pca.hpp"
#include "emfleet/represent.hpp"

using namespace emfleet;

namespace {

FleetDataset grouped_dataset(std::uint32_t seed, std::size_t groups, std::size_t per_group,
                             std::size_t d) {
    std::mt19937 gen(seed);
    std::uniform_int_distribution<std::int64_t> count(0, 300);
    std::vector<SampleRecord> records;
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t i = 0; i < per_group; ++i) {
            SampleRecord r;
            char id[48];
            std::snprintf(id, sizeof(id), "dev-%02zu-%03zu", g, i);
            r.sample_id = id;
            r.generation = g % 2 ? "gen-b" : "gen-a";
            r.workload_class = "c0";
            r.workload_id = "w" + std::to_string(g);
            r.checkpoint = 0;
            r.component_count = 2;
            r.steps.resize(d);
            for (auto& v : r.steps) v = count(gen);
            records.push_back(std::move(r));
        }
    return make_dataset(std::move(records));
}

Matrix random_matrix(std::mt19937& gen, std::size_t n, std::size_t d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix rows(n, std::vector<double>(d));
    for (auto& r : rows)
        for (auto& v : r) v = normal(gen);
    return rows;
}

// Power iteration with deflation: an independent eigensolver for symmetric
// positive semi-definite matrices, used only as an oracle.
std::pair<std::vector<double>, Matrix> power_iteration_eigen(Matrix a, std::size_t k) {
    const std::size_t d = a.size();
    std::vector<double> values;
    Matrix vectors;
    std::mt19937 gen(12345);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> v(d);
        for (auto& x : v) x = normal(gen);
        double lambda = 0.0;
        for (int iter = 0; iter < 20000; ++iter) {
            std::vector<double> av(d, 0.0);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) av[i] += a[i][j] * v[j];
            const double norm =
                std::sqrt(std::inner_product(av.begin(), av.end(), av.begin(), 0.0));
            if (norm == 0.0) break;
            for (std::size_t i = 0; i < d; ++i) av[i] /= norm;
            double delta = 0.0;
            for (std::size_t i = 0; i < d; ++i) delta = std::max(delta, std::abs(av[i] - v[i]));
            v = av;
            lambda = norm;
            if (delta < 1e-14) break;
        }
        values.push_back(lambda);
        vectors.push_back(v);
        // deflate: a -= lambda v v^T
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) a[i][j] -= lambda * v[i] * v[j];
    }
    return {values, vectors};
}

Matrix covariance(const Matrix& rows) {
    const std::size_t n = rows.size(), d = rows.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    Matrix cov(d, std::vector<double>(d, 0.0));
    for (const auto& r : rows)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
    for (auto& row : cov)
        for (auto& v : row) v /= static_cast<double>(n - 1);
    return cov;
}

}  // namespace

TEST_CASE("per_step_scores equals per-dimension scores of a joint fit") {
    const FleetDataset ds = grouped_dataset(1, 3, 20, 4);
    const Matrix scores = per_step_scores(ds);
    const EcodModel model = EcodModel::fit(ds);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const SampleScore s = model.score_sample(ds.records[i].steps);
        for (std::size_t j = 0; j < ds.d; ++j) CHECK(scores[i][j] == s.dims[j].auto_score);
    }
}

TEST_CASE("per_step_scores column is independent of other columns") {
    // permuting another column leaves a column's scores unchanged (ECOD treats
    // dimensions independently)
    FleetDataset ds = grouped_dataset(2, 2, 15, 3);
    const Matrix before = per_step_scores(ds);
    std::mt19937 gen(3);
    std::vector<std::size_t> perm(ds.n());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    FleetDataset shuffled = ds;
    for (std::size_t i = 0; i < ds.n(); ++i)
        shuffled.records[i].steps[2] = ds.records[perm[i]].steps[2];
    const Matrix after = per_step_scores(shuffled);
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(before[i][j] == after[i][j]);
}

TEST_CASE("median oracle") {
    CHECK(median({3.0}) == 3.0);
    CHECK(median({1.0, 9.0}) == 5.0);
    CHECK(median({5.0, 1.0, 9.0}) == 5.0);
    CHECK(median({4.0, 1.0, 9.0, 5.0}) == 4.5);
    CHECK_THROWS_AS(median({}), ValidationError);
    // matches std::nth_element-free sort definition on random input
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> v(1 + static_cast<std::size_t>(gen() % 30));
        for (auto& x : v) x = u(gen);
        std::vector<double> s = v;
        std::sort(s.begin(), s.end());
        const double expect =
            s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
        CHECK(median(v) == doctest::Approx(expect));
    }
}

TEST_CASE("compress_medians groups rows and takes column medians") {
    const Matrix scores = {{1, 10}, {3, 30}, {2, 20}, {100, 0}, {200, 2}};
    GroupInfo a{"a", "a", "g", "c"}, b{"b", "b", "g", "c"};
    const WorkloadFeatureMatrix out = compress_medians(scores, {a, a, a, b, b});
    REQUIRE(out.groups.size() == 2);
    CHECK(out.groups[0].key == "a");
    CHECK(out.values[0] == std::vector<double>{2.0, 20.0});
    CHECK(out.values[1] == std::vector<double>{150.0, 1.0});

    // undersized group is rejected by name
    try {
        compress_medians(scores, {a, a, a, a, b});
        FAIL("expected throw");
    } catch (const ConstraintError& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
    CHECK_THROWS_AS(compress_medians(scores, {a, a}), DimensionError);
}

TEST_CASE("build_feature_matrix shapes and ordering") {
    const FleetDataset ds = grouped_dataset(5, 4, 12, 6);
    const WorkloadFeatureMatrix m = build_feature_matrix(ds, 0, GroupBy::workload);
    REQUIRE(m.groups.size() == 4);
    CHECK(std::is_sorted(m.groups.begin(), m.groups.end(),
                         [](const GroupInfo& x, const GroupInfo& y) { return x.key < y.key; }));
    for (const auto& row : m.values) CHECK(row.size() == 6);
    CHECK_THROWS_AS(build_feature_matrix(ds, 99, GroupBy::workload), LookupError);

    const WorkloadFeatureMatrix byclass = build_feature_matrix(ds, 0, GroupBy::workload_class);
    CHECK(byclass.groups.size() == 1);
    CHECK(byclass.groups[0].key == "c0");
}

TEST_CASE("pca: rank-1 data concentrates all variance on one component") {
    std::mt19937 gen(6);
    std::uniform_real_distribution<double> u(-5, 5);
    Matrix rows;
    const std::vector<double> dir = {3.0, -1.0, 2.0};
    for (int i = 0; i < 30; ++i) {
        const double t = u(gen);
        rows.push_back({dir[0] * t, dir[1] * t, dir[2] * t});
    }
    const PcaModel pca = pca_fit(rows, false);
    CHECK(pca.ratios[0] == doctest::Approx(1.0));
    CHECK(pca.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-9));
    // component parallel to dir, largest-|entry| positive -> +3/norm first
    const double norm = std::sqrt(9.0 + 1.0 + 4.0);
    CHECK(std::abs(pca.components[0][0]) == doctest::Approx(3.0 / norm));
    CHECK(pca.components[0][0] > 0.0);  // sign convention
}

TEST_CASE("jacobi eigensolver matches power iteration") {
    std::mt19937 gen(7);
    for (int t = 0; t < 10; ++t) {
        const Matrix rows = random_matrix(gen, 40, 5);
        const Matrix cov = covariance(rows);
        const auto [values, vectors] = jacobi_eigen_symmetric(cov);
        const auto [ovalues, ovectors] = power_iteration_eigen(cov, 5);
        for (std::size_t c = 0; c < 5; ++c) {
            CHECK(values[c] == doctest::Approx(ovalues[c]).epsilon(1e-8));
            // eigenvectors match up to sign
            double dot = 0.0;
            for (std::size_t j = 0; j < 5; ++j) dot += vectors[c][j] * ovectors[c][j];
            CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("pca invariants: orthonormality, variance conservation, sign determinism") {
    std::mt19937 gen(8);
    for (const bool scale : {false, true}) {
        const Matrix rows = random_matrix(gen, 60, 6);
        const PcaModel pca = pca_fit(rows, scale);
        // orthonormal components
        for (std::size_t a = 0; a < 6; ++a)
            for (std::size_t b = 0; b < 6; ++b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < 6; ++j) dot += pca.components[a][j] * pca.components[b][j];
                CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-10));
            }
        // eigenvalues sum to total variance of the (scaled) columns
        Matrix prepared = rows;
        for (auto& r : prepared)
            for (std::size_t j = 0; j < 6; ++j) r[j] = (r[j] - pca.mean[j]) / pca.scale[j];
        const Matrix cov = covariance(prepared);
        double trace = 0.0;
        for (std::size_t j = 0; j < 6; ++j) trace += cov[j][j];
        const double esum = std::accumulate(pca.eigenvalues.begin(), pca.eigenvalues.end(), 0.0);
        CHECK(esum == doctest::Approx(trace).epsilon(1e-8));
        // ratios sum to 1, descending eigenvalues
        CHECK(std::accumulate(pca.ratios.begin(), pca.ratios.end(), 0.0) ==
              doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::is_sorted(pca.eigenvalues.rbegin(), pca.eigenvalues.rend()));
        // refitting is bit-identical
        const PcaModel again = pca_fit(rows, scale);
        CHECK(again.components == pca.components);
        CHECK(again.eigenvalues == pca.eigenvalues);
        // sign convention: largest-magnitude entry positive
        for (const auto& comp : pca.components) {
            const auto it = std::max_element(comp.begin(), comp.end(),
                                             [](double x, double y) {
                                                 return std::abs(x) < std::abs(y);
                                             });
            CHECK(*it > 0.0);
        }
    }
}

TEST_CASE("k = d embedding reconstructs the data") {
    std::mt19937 gen(9);
    const Matrix rows = random_matrix(gen, 25, 4);
    const PcaModel pca = pca_fit(rows, false);
    const Matrix coords = embed(pca, rows, 4);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double x = pca.mean[j];
            for (std::size_t c = 0; c < 4; ++c) x += coords[i][c] * pca.components[c][j];
            CHECK(x == doctest::Approx(rows[i][j]).epsilon(1e-9));
        }
    CHECK_THROWS_AS(embed(pca, rows, 5), ConstraintError);
}

TEST_CASE("scree accumulates ratios") {
    std::mt19937 gen(10);
    const PcaModel pca = pca_fit(random_matrix(gen, 30, 5), true);
    const auto entries = scree(pca);
    REQUIRE(entries.size() == 5);
    double cum = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
        CHECK(entries[c].component == c + 1);
        CHECK(entries[c].ratio == doctest::Approx(pca.ratios[c]));
        cum += pca.ratios[c];
        CHECK(entries[c].cumulative == doctest::Approx(cum));
    }
    CHECK(entries.back().cumulative == doctest::Approx(1.0));
}

TEST_CASE("pearson and spearman") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y = {2, 4, 6, 8, 10};
    CHECK(pearson(x, y) == doctest::Approx(1.0));
    for (auto& v : y) v = -v;
    CHECK(pearson(x, y) == doctest::Approx(-1.0));
    CHECK(std::isnan(pearson(x, {3, 3, 3, 3, 3})));
    CHECK_THROWS_AS(pearson(x, {1.0}), DimensionError);

    // spearman is 1 for any monotone transform
    const std::vector<double> z = {std::exp(1.0), std::exp(2.0), std::exp(3.0),
                                   std::exp(4.0), std::exp(5.0)};
    CHECK(spearman(x, z) == doctest::Approx(1.0));

    // a monotone stress ramp survives the score nonlinearity with high rank
    // correlation
    std::vector<double> ramp, noisy;
    std::mt19937 gen(11);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int i = 0; i < 40; ++i) {
        ramp.push_back(i);
        noisy.push_back(std::log1p(i) + noise(gen));
    }
    CHECK(spearman(ramp, noisy) >= 0.8);
}

TEST_CASE("axis_correlation picks the best component per axis") {
    // embedding with two orthogonal coordinates; axes equal to them plus a
    // constant axis
    Matrix emb;
    std::vector<double> a, b, constant;
    std::mt19937 gen(12);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 25; ++i) {
        const double u = normal(gen), v = normal(gen);
        emb.push_back({u, v});
        a.push_back(u);
        b.push_back(-3.0 * v + 1.0);
        constant.push_back(2.0);
    }
    const auto matches = axis_correlation(emb, {{"a", a}, {"b", b}, {"flat", constant}});
    REQUIRE(matches.size() == 3);
    CHECK(matches[0].best_pc == 1);
    CHECK(matches[0].correlation == doctest::Approx(1.0));
    CHECK(matches[1].best_pc == 2);
    CHECK(matches[1].correlation == doctest::Approx(1.0));
    CHECK(!matches[2].defined);
    CHECK_THROWS_AS(axis_correlation(emb, {{"short", {1.0}}}), DimensionError);
}

TEST_CASE("csv emitters carry one row per entity") {
    const FleetDataset ds = grouped_dataset(13, 3, 10, 4);
    const WorkloadFeatureMatrix m = build_feature_matrix(ds, 0, GroupBy::workload);
    const std::string csv = feature_matrix_csv(m);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 groups
    const PcaModel pca = pca_fit(m.values, true);
    const std::string emb = embedding_csv(m, embed(pca, m.values, 2));
    CHECK(std::count(emb.begin(), emb.end(), '\n') == 4);
    CHECK(emb.substr(0, emb.find('\n')) == "group_key,generation,workload_class,pc1,pc2");
}
