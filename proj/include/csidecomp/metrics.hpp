#ifndef CSIDECOMP_METRICS_HPP
#define CSIDECOMP_METRICS_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "csidecomp/csi.hpp"
#include "csidecomp/dhsic.hpp"
#include "csidecomp/parallel.hpp"
#include "csidecomp/rng.hpp"

namespace csid {

struct CcReport {
    double avg_cc = 0.0;
    std::size_t pairs = 0;
    std::size_t skipped = 0; // pairs with a zero-variance column
};

/// Mean Pearson correlation between each node's column and each of its
/// neighbours' columns. Pairs involving a constant column are skipped.
inline CcReport avg_neighbor_cc(const Eigen::MatrixXd& columns, const NeighborTable& neighbors) {
    const auto n = static_cast<std::size_t>(columns.cols());
    require(neighbors.size() == n, ErrorKind::ShapeMismatch, "neighbour table does not match node count");
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> used(n, 0);
    std::vector<std::size_t> skipped(n, 0);
    const Eigen::MatrixXd centered = columns.rowwise() - columns.colwise().mean();
    const Eigen::VectorXd norms = centered.colwise().norm().transpose();
    parallel_for(n, [&](std::size_t i) {
        const auto a = static_cast<Eigen::Index>(i);
        for (std::size_t j : neighbors[i]) {
            require(j < n, ErrorKind::InvalidArgument, "neighbour index out of range");
            const auto b = static_cast<Eigen::Index>(j);
            if (!(norms(a) > 0.0) || !(norms(b) > 0.0)) {
                ++skipped[i];
                continue;
            }
            sum[i] += std::clamp(centered.col(a).dot(centered.col(b)) / (norms(a) * norms(b)), -1.0, 1.0);
            ++used[i];
        }
    });
    CcReport rep;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += sum[i];
        rep.pairs += used[i];
        rep.skipped += skipped[i];
    }
    rep.avg_cc = rep.pairs > 0 ? total / static_cast<double>(rep.pairs) : 0.0;
    return rep;
}

struct DeltaBarOptions {
    std::size_t k = 1;         // nearest neighbours per node before de-duplication
    std::size_t max_pairs = 0; // 0 = all pairs, else an evenly strided subset
    double alpha = 0.05;
    std::size_t b = 1000;
    std::uint64_t seed = 1;
};

struct DeltaBarReport {
    double avg_delta_bar = 0.0;
    double avg_ratio = 0.0;
    double reject_rate = 0.0;
    std::size_t pairs = 0;
    std::size_t degenerate_pairs = 0;
};

/// Evenly strided subset of at most max_pairs pairs (all pairs when 0).
inline std::vector<std::pair<std::size_t, std::size_t>> subsample_pairs(
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs, std::size_t max_pairs) {
    if (max_pairs == 0 || pairs.size() <= max_pairs) {
        return pairs;
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(max_pairs);
    for (std::size_t i = 0; i < max_pairs; ++i) {
        out.push_back(pairs[i * pairs.size() / max_pairs]);
    }
    return out;
}

/// Average two-variable dependence over (node, nearest neighbour) pairs; each
/// node's column is treated as one scalar variable observed at every row.
inline DeltaBarReport avg_delta_bar(const Eigen::MatrixXd& columns,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                    const DeltaBarOptions& opts) {
    require(!pairs.empty(), ErrorKind::InvalidArgument, "no node pairs to test");
    auto column = [&](std::size_t j) {
        require(j < static_cast<std::size_t>(columns.cols()), ErrorKind::InvalidArgument, "node index out of range");
        const auto c = columns.col(static_cast<Eigen::Index>(j));
        return std::vector<double>(c.data(), c.data() + c.size());
    };
    DeltaBarReport rep;
    rep.pairs = pairs.size();
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const DhsicInput input({column(pairs[p].first), column(pairs[p].second)});
        const DependenceReport dep = dhsic_test(input, opts.alpha, opts.b, derive_seed(opts.seed, 0x50414952u, p));
        rep.avg_delta_bar += dep.delta_bar;
        rep.avg_ratio += dep.ratio;
        rep.reject_rate += dep.reject ? 1.0 : 0.0;
        rep.degenerate_pairs += dep.degenerate;
    }
    const double count = static_cast<double>(pairs.size());
    rep.avg_delta_bar /= count;
    rep.avg_ratio /= count;
    rep.reject_rate /= count;
    return rep;
}

inline DeltaBarReport avg_delta_bar(const Eigen::MatrixXd& columns, const NodeGeometry& geom, const DeltaBarOptions& opts) {
    require(geom.size() == static_cast<std::size_t>(columns.cols()), ErrorKind::ShapeMismatch,
            "geometry does not match node count");
    return avg_delta_bar(columns, subsample_pairs(neighbor_pairs(geom, opts.k), opts.max_pairs), opts);
}

} // namespace csid

#endif
