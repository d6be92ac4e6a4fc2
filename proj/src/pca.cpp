#include "emfleet/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emfleet/errors.hpp"

namespace emfleet {

std::pair<std::vector<double>, Matrix> jacobi_eigen_symmetric(const Matrix& input) {
    const std::size_t d = input.size();
    Matrix a = input;
    Matrix v(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) v[i][i] = 1.0;

    constexpr double kOffDiagTol = 1e-12;
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off = std::max(off, std::abs(a[p][q]));
        if (off < kOffDiagTol) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                if (std::abs(a[p][q]) < kOffDiagTol) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v[k][p];
                    const double vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
    std::vector<double> eigenvalues(d);
    Matrix eigenvectors(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) {
        eigenvalues[i] = a[order[i]][order[i]];
        for (std::size_t k = 0; k < d; ++k) eigenvectors[i][k] = v[k][order[i]];
    }
    return {std::move(eigenvalues), std::move(eigenvectors)};
}

namespace {

void apply_sign_convention(Matrix& components) {
    for (std::vector<double>& comp : components) {
        std::size_t arg = 0;
        for (std::size_t k = 1; k < comp.size(); ++k)
            if (std::abs(comp[k]) > std::abs(comp[arg])) arg = k;
        if (comp[arg] < 0.0)
            for (double& x : comp) x = -x;
    }
}

}  // namespace

PcaModel pca_fit(const Matrix& rows, bool scale) {
    if (rows.size() < 2)
        throw ValidationError("PCA needs at least 2 rows, got " + std::to_string(rows.size()));
    const std::size_t d = rows.front().size();
    if (d < 1) throw ValidationError("PCA needs at least 1 column");
    for (const std::vector<double>& r : rows)
        if (r.size() != d) throw DimensionError("ragged feature matrix");

    const double n = static_cast<double>(rows.size());
    PcaModel model;
    model.scaled = scale;
    model.mean.assign(d, 0.0);
    for (const std::vector<double>& r : rows)
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += r[j];
    for (double& m : model.mean) m /= n;

    model.scale.assign(d, 1.0);
    if (scale) {
        for (std::size_t j = 0; j < d; ++j) {
            double ss = 0.0;
            for (const std::vector<double>& r : rows) {
                const double dv = r[j] - model.mean[j];
                ss += dv * dv;
            }
            const double var = ss / (n - 1.0);
            if (var > 0.0) model.scale[j] = std::sqrt(var);
        }
    }

    Matrix centered(rows.size(), std::vector<double>(d));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
            centered[i][j] = (rows[i][j] - model.mean[j]) / model.scale[j];

    Matrix cov(d, std::vector<double>(d, 0.0));
    for (const std::vector<double>& r : centered)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = j; k < d; ++k) cov[j][k] += r[j] * r[k];
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j; k < d; ++k) {
            cov[j][k] /= (n - 1.0);
            cov[k][j] = cov[j][k];
        }

    auto [eigenvalues, eigenvectors] = jacobi_eigen_symmetric(cov);
    for (double& ev : eigenvalues) ev = std::max(ev, 0.0);  // clip rounding noise
    model.eigenvalues = std::move(eigenvalues);
    model.components = std::move(eigenvectors);
    apply_sign_convention(model.components);

    const double total =
        std::accumulate(model.eigenvalues.begin(), model.eigenvalues.end(), 0.0);
    model.ratios.assign(d, 0.0);
    if (total > 0.0)
        for (std::size_t i = 0; i < d; ++i) model.ratios[i] = model.eigenvalues[i] / total;
    return model;
}

std::vector<ScreeEntry> scree(const PcaModel& pca) {
    std::vector<ScreeEntry> out;
    out.reserve(pca.ratios.size());
    double cumulative = 0.0;
    for (std::size_t i = 0; i < pca.ratios.size(); ++i) {
        cumulative += pca.ratios[i];
        out.push_back({i + 1, pca.ratios[i], cumulative});
    }
    return out;
}

Matrix embed(const PcaModel& pca, const Matrix& rows, std::size_t k) {
    if (k > pca.components.size())
        throw ConstraintError("k=" + std::to_string(k) + " exceeds the " +
                              std::to_string(pca.components.size()) + " retained components");
    Matrix coords(rows.size(), std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != pca.dim()) throw DimensionError("row dimension != PCA dimension");
        for (std::size_t c = 0; c < k; ++c) {
            double dot = 0.0;
            for (std::size_t j = 0; j < pca.dim(); ++j)
                dot += (rows[i][j] - pca.mean[j]) / pca.scale[j] * pca.components[c][j];
            coords[i][c] = dot;
        }
    }
    return coords;
}

}  // namespace emfleet
