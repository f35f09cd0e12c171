#ifndef CSIDECOMP_SKG_HPP
#define CSIDECOMP_SKG_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "csidecomp/csi.hpp"
#include "csidecomp/parallel.hpp"

namespace csid {

struct BitSequence {
    std::vector<std::uint8_t> bits;
    std::size_t node = 0;
    Direction direction = Direction::Uplink;
    bool degenerate = false; // constant input
};

/// Lower middle order statistic, so the value is always one of the inputs.
inline double lower_median(std::span<const double> x) {
    require(!x.empty(), ErrorKind::InvalidArgument, "median of an empty sequence");
    std::vector<double> tmp(x.begin(), x.end());
    const std::size_t k = (tmp.size() - 1) / 2;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(k), tmp.end());
    return tmp[k];
}

/// One-bit quantiser about the median: bit_t = x_t > median(x).
inline BitSequence quantize_median(std::span<const double> x, std::size_t node = 0,
                                   Direction direction = Direction::Uplink) {
    require(x.size() >= 2, ErrorKind::InsufficientSamples, "quantiser needs at least two samples");
    const double med = lower_median(x);
    BitSequence out;
    out.node = node;
    out.direction = direction;
    out.bits.resize(x.size());
    std::transform(x.begin(), x.end(), out.bits.begin(), [med](double v) { return static_cast<std::uint8_t>(v > med); });
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    out.degenerate = *lo == *hi;
    return out;
}

inline double mismatch_probability(const BitSequence& a, const BitSequence& b) {
    require(a.bits.size() == b.bits.size(), ErrorKind::ShapeMismatch, "bit sequences differ in length");
    require(!a.bits.empty(), ErrorKind::InvalidArgument, "empty bit sequences");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        diff += a.bits[i] != b.bits[i];
    }
    return static_cast<double>(diff) / static_cast<double>(a.bits.size());
}

struct MpReport {
    std::vector<double> per_node_mp;
    double avg_mp = 0.0;
    std::size_t degenerate_nodes = 0;
};

/// Quantises every node column of both directions (all 2M real coordinates as
/// one sequence) and averages the per-node mismatch probability.
inline MpReport avg_mp(const Eigen::MatrixXd& uplink, const Eigen::MatrixXd& downlink) {
    require(uplink.rows() == downlink.rows() && uplink.cols() == downlink.cols(), ErrorKind::ShapeMismatch,
            "uplink and downlink components differ in shape");
    const auto n = static_cast<std::size_t>(uplink.cols());
    MpReport rep;
    rep.per_node_mp.assign(n, 0.0);
    std::vector<std::uint8_t> degenerate(n, 0);
    parallel_for(n, [&](std::size_t j) {
        const auto col = static_cast<Eigen::Index>(j);
        const Eigen::VectorXd u = uplink.col(col);
        const Eigen::VectorXd v = downlink.col(col);
        const BitSequence a = quantize_median({u.data(), static_cast<std::size_t>(u.size())}, j, Direction::Uplink);
        const BitSequence b = quantize_median({v.data(), static_cast<std::size_t>(v.size())}, j, Direction::Downlink);
        rep.per_node_mp[j] = mismatch_probability(a, b);
        degenerate[j] = a.degenerate || b.degenerate;
    });
    for (std::size_t j = 0; j < n; ++j) {
        rep.avg_mp += rep.per_node_mp[j];
        rep.degenerate_nodes += degenerate[j];
    }
    rep.avg_mp /= static_cast<double>(n);
    return rep;
}

} // namespace csid

#endif
