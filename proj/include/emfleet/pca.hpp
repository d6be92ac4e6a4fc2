#ifndef EMFLEET_PCA_HPP
#define EMFLEET_PCA_HPP

#include <cstddef>
#include <vector>

namespace emfleet {

using Matrix = std::vector<std::vector<double>>;  // row-major

// Principal components of row observations. Columns are always centered;
// optionally scaled to unit variance. components[i] is the i-th eigenvector
// (length d), eigenvalues are non-increasing, ratios sum to 1 over all d
// components. Sign convention: each component's largest-magnitude entry is
// positive, so repeated fits are bit-identical.
struct PcaModel {
    std::vector<double> mean;          // length d
    std::vector<double> scale;         // length d; 1.0 where unscaled or zero-variance
    bool scaled = false;
    Matrix components;                 // d eigenvectors, eigenvalue-descending
    std::vector<double> eigenvalues;   // length d
    std::vector<double> ratios;        // eigenvalue / total variance

    std::size_t dim() const { return mean.size(); }
};

// Eigendecomposition of the sample covariance of rows (cyclic Jacobi;
// matrices here are tiny). Requires >= 2 rows and >= 1 column.
PcaModel pca_fit(const Matrix& rows, bool scale);

struct ScreeEntry {
    std::size_t component = 0;  // 1-based
    double ratio = 0.0;
    double cumulative = 0.0;
};

std::vector<ScreeEntry> scree(const PcaModel& pca);

// Projects centered (and scaled, if fit so) rows onto the top-k components.
Matrix embed(const PcaModel& pca, const Matrix& rows, std::size_t k);

// Symmetric eigendecomposition helper shared with pca_fit. Returns
// (eigenvalues, eigenvectors) sorted by eigenvalue descending; eigenvector i
// is the i-th row of the returned matrix.
std::pair<std::vector<double>, Matrix> jacobi_eigen_symmetric(const Matrix& a);

}  // namespace emfleet

#endif  // EMFLEET_PCA_HPP
