#ifndef CSIDECOMP_KPCA_HPP
#define CSIDECOMP_KPCA_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "csidecomp/csi.hpp"
#include "csidecomp/parallel.hpp"

namespace csid {

enum class KernelVariant {
    AsWritten, // exp(-|h_i - conj(h_j)|^2 / (2 sigma^2))
    Standard,  // exp(-|h_i - h_j|^2 / (2 sigma^2))
};

struct GramMatrix {
    Eigen::MatrixXd k;
    double bandwidth_sigma = 0.0;
    double asymmetry_norm = 0.0; // |K - K^T|_F before symmetrisation
};

/// Median of the values; the mean of the two middle elements for even counts.
inline double median_of(std::vector<double> values) {
    require(!values.empty(), ErrorKind::InvalidArgument, "median of an empty set");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// sigma = sqrt(median / 2) over the off-diagonal squared distances.
inline double median_bandwidth(const Eigen::MatrixXd& sq_dist) {
    std::vector<double> off;
    const Eigen::Index n = sq_dist.rows();
    off.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            off.push_back(sq_dist(i, j));
        }
    }
    const double med = median_of(std::move(off));
    require(med > 0.0, ErrorKind::DegenerateBandwidth, "median pairwise distance is zero");
    return std::sqrt(med / 2.0);
}

/// Gaussian Gram matrix over complex column vectors.
inline GramMatrix gaussian_gram(const Eigen::MatrixXcd& columns, std::optional<double> sigma = std::nullopt,
                                KernelVariant variant = KernelVariant::AsWritten) {
    const Eigen::Index n = columns.cols();
    require(n >= 2, ErrorKind::InsufficientSamples, "Gram matrix needs at least two columns");
    if (sigma) {
        require(*sigma > 0.0 && std::isfinite(*sigma), ErrorKind::InvalidArgument, "bandwidth must be positive");
    }
    Eigen::MatrixXd sq(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
        const auto j = static_cast<Eigen::Index>(jj);
        const Eigen::VectorXcd other =
            variant == KernelVariant::AsWritten ? Eigen::VectorXcd(columns.col(j).conjugate()) : Eigen::VectorXcd(columns.col(j));
        for (Eigen::Index i = 0; i < n; ++i) {
            sq(i, j) = (columns.col(i) - other).squaredNorm();
        }
    });

    GramMatrix g;
    g.bandwidth_sigma = sigma ? *sigma : median_bandwidth(sq);
    const double denom = 2.0 * g.bandwidth_sigma * g.bandwidth_sigma;
    g.k = (-sq.array() / denom).exp().matrix();
    g.asymmetry_norm = (g.k - g.k.transpose()).norm();
    const Eigen::MatrixXd sym = 0.5 * (g.k + g.k.transpose());
    g.k = sym;
    return g;
}

/// Real Gaussian Gram matrix over real column vectors.
inline GramMatrix gaussian_gram_real(const Eigen::MatrixXd& columns, std::optional<double> sigma = std::nullopt) {
    const Eigen::Index n = columns.cols();
    require(n >= 2, ErrorKind::InsufficientSamples, "Gram matrix needs at least two columns");
    const Eigen::VectorXd norms = columns.colwise().squaredNorm().transpose();
    Eigen::MatrixXd sq = -2.0 * columns.transpose() * columns;
    sq.colwise() += norms;
    sq.rowwise() += norms.transpose();
    sq = sq.cwiseMax(0.0);
    sq.diagonal().setZero();
    GramMatrix g;
    g.bandwidth_sigma = sigma ? *sigma : median_bandwidth(sq);
    const double denom = 2.0 * g.bandwidth_sigma * g.bandwidth_sigma;
    g.k = (-sq.array() / denom).exp().matrix();
    return g;
}

/// K - (1/N) 1K - (1/N) K1 + (1/N^2) 1K1
inline Eigen::MatrixXd center_gram(const Eigen::MatrixXd& k) {
    require(k.rows() == k.cols() && k.rows() >= 1, ErrorKind::ShapeMismatch, "Gram matrix must be square");
    const Eigen::VectorXd col_means = k.colwise().mean().transpose();
    const Eigen::VectorXd row_means = k.rowwise().mean();
    const double grand = k.mean();
    Eigen::MatrixXd out = k;
    out.rowwise() -= col_means.transpose();
    out.colwise() -= row_means;
    out.array() += grand;
    return out;
}

struct KpcaOptions {
    std::size_t d_hat = 1;
    std::optional<double> gamma;  // ridge; default 1e-3 * trace(K_Y) / N
    std::optional<double> sigma;  // input-kernel bandwidth; default median heuristic
    KernelVariant variant = KernelVariant::AsWritten;
};

struct KpcaModel {
    Eigen::MatrixXd centered_gram;
    Eigen::MatrixXd alphas;      // N x d_hat, V_i / sqrt(lambda_i)
    Eigen::VectorXd eigenvalues; // all lambda (K~ alpha = N lambda alpha), descending, clamped
    Eigen::MatrixXd scores;      // d_hat x N
    std::size_t d_hat = 0;       // retained after rank truncation
    double sigma = 0.0;
    double asymmetry_norm = 0.0;
    std::optional<double> gamma;
    std::size_t n = 0;
    std::vector<std::string> warnings;
};

inline constexpr double kKpcaEigenFloor = 1e-12;

inline KpcaModel fit_kpca(const CsiMatrix& csi, const KpcaOptions& opts) {
    const std::size_t n = csi.n();
    require(n >= 2, ErrorKind::InsufficientSamples, "KPCA needs at least two nodes");
    require(opts.d_hat >= 1 && opts.d_hat <= n - 1, ErrorKind::InvalidArgument,
            "d_hat must lie in [1, N-1] = [1, " + std::to_string(n - 1) + "]");
    if (opts.gamma) {
        require(*opts.gamma > 0.0, ErrorKind::InvalidArgument, "ridge gamma must be positive");
    }

    KpcaModel model;
    const GramMatrix gram = gaussian_gram(csi.data(), opts.sigma, opts.variant);
    model.sigma = gram.bandwidth_sigma;
    model.asymmetry_norm = gram.asymmetry_norm;
    model.centered_gram = center_gram(gram.k);
    model.gamma = opts.gamma;
    model.n = n;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(model.centered_gram);
    require(solver.info() == Eigen::Success, ErrorKind::NonConvergence, "centred Gram eigensolver failed");
    const auto ni = static_cast<Eigen::Index>(n);
    const double nd = static_cast<double>(n);
    model.eigenvalues.resize(ni);
    Eigen::MatrixXd vectors(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
        const Eigen::Index src = ni - 1 - i;
        const double lambda = solver.eigenvalues()(src) / nd;
        model.eigenvalues(i) = lambda < kKpcaEigenFloor ? 0.0 : lambda;
        vectors.col(i) = solver.eigenvectors().col(src);
    }

    std::size_t rank = 0;
    while (rank < n && model.eigenvalues(static_cast<Eigen::Index>(rank)) > 0.0) {
        ++rank;
    }
    model.d_hat = std::min(opts.d_hat, rank);
    if (model.d_hat < opts.d_hat) {
        model.warnings.push_back("d_hat = " + std::to_string(opts.d_hat) + " exceeds numerical rank " +
                                 std::to_string(rank) + "; truncated");
    }
    require(model.d_hat >= 1, ErrorKind::InvalidArgument, "centred Gram matrix has numerical rank zero");

    const auto d = static_cast<Eigen::Index>(model.d_hat);
    model.alphas.resize(ni, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        model.alphas.col(i) = vectors.col(i) / std::sqrt(model.eigenvalues(i));
    }
    model.scores = model.alphas.transpose() * model.centered_gram;
    return model;
}

struct KpcaReconstruction {
    CsiMatrix predictable;
    CsiMatrix residual;
    double gamma = 0.0;
    double score_sigma = 0.0;
    double condition_estimate = 0.0;
    std::vector<std::string> warnings;
};

/// Kernel ridge reconstruction H^ = H (K_Y + gamma I)^{-1} K_Y with K_Y the
/// Gaussian Gram matrix of the score columns; the residual is H - H^.
inline KpcaReconstruction reconstruct_predictable(const KpcaModel& model, const CsiMatrix& csi) {
    require(csi.n() == model.n, ErrorKind::ShapeMismatch,
            "model fitted on " + std::to_string(model.n) + " nodes, data has " + std::to_string(csi.n()));
    const GramMatrix ky = gaussian_gram_real(model.scores);
    const auto n = static_cast<Eigen::Index>(model.n);
    const double gamma = model.gamma ? *model.gamma : 1e-3 * ky.k.trace() / static_cast<double>(n);
    require(gamma > 0.0, ErrorKind::InvalidArgument, "ridge gamma must be positive");

    Eigen::MatrixXd system = ky.k;
    system.diagonal().array() += gamma;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    require(llt.info() == Eigen::Success, ErrorKind::NonConvergence, "ridge system is not positive definite");

    KpcaReconstruction out{csi, csi, gamma, ky.bandwidth_sigma, 0.0, {}};
    const double rcond = llt.rcond();
    out.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (out.condition_estimate > 1e12) {
        out.warnings.push_back("ridge system is ill-conditioned (condition estimate " +
                               std::to_string(out.condition_estimate) + ")");
    }

    // beta^T = A^{-1} H^T since A is symmetric; real and imaginary parts solve separately.
    const Eigen::MatrixXd beta_re = llt.solve(csi.data().real().transpose()).transpose();
    const Eigen::MatrixXd beta_im = llt.solve(csi.data().imag().transpose()).transpose();
    Eigen::MatrixXcd predictable(csi.data().rows(), n);
    predictable.real() = beta_re * ky.k;
    predictable.imag() = beta_im * ky.k;
    Eigen::MatrixXcd residual = csi.data() - predictable;
    out.predictable = CsiMatrix(std::move(predictable), csi.direction(), csi.snr_db());
    out.residual = CsiMatrix(std::move(residual), csi.direction(), csi.snr_db());
    return out;
}

} // namespace csid

#endif
