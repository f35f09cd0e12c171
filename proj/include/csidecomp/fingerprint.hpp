#ifndef CSIDECOMP_FINGERPRINT_HPP
#define CSIDECOMP_FINGERPRINT_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "csidecomp/csi.hpp"
#include "csidecomp/parallel.hpp"
#include "csidecomp/pca.hpp"

namespace csid {

struct EmpiricalMeasure {
    std::vector<double> bin_edges;
    std::vector<double> probs;
    std::size_t clipped = 0; // samples outside the edges, counted in the end bins
};

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
    require(bins >= 1, ErrorKind::InvalidArgument, "need at least one bin");
    require(std::isfinite(lo) && std::isfinite(hi) && hi > lo, ErrorKind::InvalidArgument, "bin range must be non-empty");
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    edges.back() = hi;
    return edges;
}

/// Normalised histogram; bins are [e_i, e_{i+1}) except the last, which is closed.
inline EmpiricalMeasure histogram(std::span<const double> samples, std::vector<double> edges) {
    require(!samples.empty(), ErrorKind::InsufficientSamples, "histogram needs at least one sample");
    require(edges.size() >= 2, ErrorKind::InvalidArgument, "need at least two bin edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        require(edges[i] > edges[i - 1], ErrorKind::InvalidArgument, "bin edges must be strictly increasing");
    }
    EmpiricalMeasure mu;
    const std::size_t bins = edges.size() - 1;
    std::vector<std::size_t> counts(bins, 0);
    for (double x : samples) {
        std::size_t bin = 0;
        if (x < edges.front()) {
            ++mu.clipped;
        } else if (x >= edges.back()) {
            bin = bins - 1;
            mu.clipped += x > edges.back();
        } else {
            bin = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()) - 1;
        }
        ++counts[bin];
    }
    mu.probs.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        mu.probs[i] = static_cast<double>(counts[i]) / static_cast<double>(samples.size());
    }
    mu.bin_edges = std::move(edges);
    return mu;
}

/// Half the L1 distance between two measures on the same grid.
inline double tvd(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    require(mu.bin_edges == nu.bin_edges && mu.probs.size() == nu.probs.size(), ErrorKind::GridMismatch,
            "measures are defined on different bin grids");
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.probs.size(); ++i) {
        sum += std::abs(mu.probs[i] - nu.probs[i]);
    }
    return std::min(1.0, 0.5 * sum);
}

/// TVD between two sample sets binned on a shared grid spanning their joint range.
inline double pair_tvd(std::span<const double> a, std::span<const double> b, std::size_t bins) {
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    const double lo = std::min(*amin, *bmin);
    const double hi = std::max(*amax, *bmax);
    if (!(hi > lo)) {
        return 0.0; // both sets are the same single value
    }
    const auto edges = uniform_edges(lo, hi, bins);
    const EmpiricalMeasure mu = histogram(a, edges);
    return tvd(mu, histogram(b, edges));
}

/// |re + j im| per snapshot for every column of a 2M x N real view.
inline Eigen::MatrixXd amplitudes(const Eigen::MatrixXd& real_view) {
    require(real_view.rows() % 2 == 0 && real_view.rows() >= 2, ErrorKind::ShapeMismatch, "expected a 2M-row real view");
    const Eigen::Index m = real_view.rows() / 2;
    return (real_view.topRows(m).array().square() + real_view.bottomRows(m).array().square()).sqrt().matrix();
}

/// Phase sequences, for the optional phase fingerprint.
inline Eigen::MatrixXd phases(const Eigen::MatrixXd& real_view) {
    require(real_view.rows() % 2 == 0 && real_view.rows() >= 2, ErrorKind::ShapeMismatch, "expected a 2M-row real view");
    const Eigen::Index m = real_view.rows() / 2;
    return real_view.bottomRows(m).binaryExpr(real_view.topRows(m), [](double im, double re) { return std::atan2(im, re); });
}

enum class FingerprintFeature { Amplitude, Phase };

/// Mean TVD over every (node, neighbour) pair of per-node fingerprint sequences
/// (one column per node). The mean is reduced in node order.
inline double avg_neighbor_tvd(const Eigen::MatrixXd& fingerprints, const NeighborTable& neighbors, std::size_t bins = 32) {
    const auto n = static_cast<std::size_t>(fingerprints.cols());
    require(neighbors.size() == n, ErrorKind::ShapeMismatch, "neighbour table does not match node count");
    std::vector<double> per_node(n, 0.0);
    std::vector<std::size_t> per_count(n, 0);
    parallel_for(n, [&](std::size_t i) {
        const Eigen::VectorXd a = fingerprints.col(static_cast<Eigen::Index>(i));
        for (std::size_t j : neighbors[i]) {
            const Eigen::VectorXd b = fingerprints.col(static_cast<Eigen::Index>(j));
            per_node[i] += pair_tvd({a.data(), static_cast<std::size_t>(a.size())},
                                    {b.data(), static_cast<std::size_t>(b.size())}, bins);
            ++per_count[i];
        }
    });
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += per_node[i];
        count += per_count[i];
    }
    require(count > 0, ErrorKind::InvalidArgument, "no neighbour pairs");
    return total / static_cast<double>(count);
}

struct TvdPoint {
    std::size_t d_hat = 0;
    double avg_tvd = 0.0;
};

/// Average neighbour TVD of the rank-d_hat PCA reconstruction for
/// d_hat = 0..d_hat_max; d_hat = 0 uses the raw measurements.
inline std::vector<TvdPoint> tvd_curve(const RealView& view, const PcaBasis& basis, const NeighborTable& neighbors,
                                       std::size_t d_hat_max, std::size_t bins = 32,
                                       FingerprintFeature feature = FingerprintFeature::Amplitude,
                                       bool restore_mean = false) {
    require(d_hat_max <= basis.dims(), ErrorKind::InvalidArgument, "d_hat_max exceeds the number of components");
    auto feature_of = [feature](const Eigen::MatrixXd& x) {
        return feature == FingerprintFeature::Amplitude ? amplitudes(x) : phases(x);
    };
    const Eigen::MatrixXd centered = view.data().colwise() - basis.mean;
    std::vector<TvdPoint> curve;
    curve.push_back({0, avg_neighbor_tvd(feature_of(view.data()), neighbors, bins)});
    for (std::size_t d = 1; d <= d_hat_max; ++d) {
        Eigen::MatrixXd predictable = project_band(basis, centered, 1, d);
        if (restore_mean) {
            predictable.colwise() += basis.mean;
        }
        curve.push_back({d, avg_neighbor_tvd(feature_of(predictable), neighbors, bins)});
    }
    return curve;
}

} // namespace csid

#endif
