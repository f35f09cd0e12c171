#ifndef CSIDECOMP_PCA_HPP
#define CSIDECOMP_PCA_HPP

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "csidecomp/csi.hpp"

namespace csid {

/// Principal directions of the node-as-sample covariance of a real view.
/// Row i of `eigenvectors` is the i-th principal direction.
struct PcaBasis {
    Eigen::MatrixXd eigenvectors;
    Eigen::VectorXd eigenvalues; // descending, clamped at zero
    Eigen::VectorXd mean;        // per-feature mean over nodes

    std::size_t dims() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// {d_hat, d1, d2}: components 1..d_hat are predictable, d1..d2 unpredictable,
/// everything after d2 is discarded. Indices are 1-based; d1 - 1 components
/// are omitted from the unpredictable band.
struct DecompConfig {
    std::size_t d_hat = 1;
    std::size_t d1 = 2;
    std::size_t d2 = 2;

    void validate(std::size_t dims) const {
        require(d_hat <= dims, ErrorKind::InvalidArgument,
                "d_hat = " + std::to_string(d_hat) + " exceeds " + std::to_string(dims) + " components");
        require(d1 >= 1 && d1 <= d2 && d2 <= dims, ErrorKind::InvalidArgument,
                "need 1 <= d1 <= d2 <= " + std::to_string(dims) + ", got d1 = " + std::to_string(d1) +
                    ", d2 = " + std::to_string(d2));
    }
};

struct Decomposition {
    Eigen::MatrixXd predictable;   // 2M x N, centred coordinates
    Eigen::MatrixXd unpredictable; // 2M x N, centred coordinates
    DecompConfig config;
    Eigen::VectorXd mean;
};

namespace pca_detail {

inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    const double scale = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12 * scale) {
            if (v(i) < 0.0) {
                v = -v;
            }
            return;
        }
    }
}

} // namespace pca_detail

inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean) {
    const Eigen::MatrixXd centered = x.colwise() - mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(x.rows(), x.rows());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    return cov / static_cast<double>(x.cols() - 1);
}

inline PcaBasis fit_pca(const RealView& view) {
    const Eigen::MatrixXd& x = view.data();
    require(x.cols() >= 2, ErrorKind::InsufficientSamples, "PCA needs at least two nodes");
    PcaBasis basis;
    basis.mean = x.rowwise().mean();
    const Eigen::MatrixXd cov = covariance(x, basis.mean);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    require(solver.info() == Eigen::Success, ErrorKind::NonConvergence, "covariance eigensolver failed");
    const Eigen::Index d = cov.rows();
    basis.eigenvalues.resize(d);
    basis.eigenvectors.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        // Eigen returns ascending order.
        const Eigen::Index src = d - 1 - i;
        const double lambda = solver.eigenvalues()(src);
        basis.eigenvalues(i) = lambda < 0.0 ? 0.0 : lambda;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        pca_detail::fix_sign(v);
        basis.eigenvectors.row(i) = v.transpose();
    }
    return basis;
}

/// Projection of centred data onto principal components [first, last] (1-based, inclusive).
inline Eigen::MatrixXd project_band(const PcaBasis& basis, const Eigen::MatrixXd& centered, std::size_t first,
                                    std::size_t last) {
    if (first > last || last == 0) {
        return Eigen::MatrixXd::Zero(centered.rows(), centered.cols());
    }
    const auto start = static_cast<Eigen::Index>(first - 1);
    const auto count = static_cast<Eigen::Index>(last - first + 1);
    const auto band = basis.eigenvectors.middleRows(start, count);
    const Eigen::MatrixXd scores = band * centered;
    return band.transpose() * scores;
}

inline Decomposition decompose(const RealView& view, const PcaBasis& basis, const DecompConfig& cfg) {
    require(view.features() == basis.dims(), ErrorKind::ShapeMismatch,
            "view has " + std::to_string(view.features()) + " features, basis " + std::to_string(basis.dims()));
    cfg.validate(basis.dims());
    const Eigen::MatrixXd centered = view.data().colwise() - basis.mean;
    Decomposition out;
    out.predictable = project_band(basis, centered, 1, cfg.d_hat);
    out.unpredictable = project_band(basis, centered, cfg.d1, cfg.d2);
    out.config = cfg;
    out.mean = basis.mean;
    return out;
}

} // namespace csid

#endif
