#ifndef CSIDECOMP_CSI_HPP
#define CSIDECOMP_CSI_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "csidecomp/error.hpp"

namespace csid {

using Complex = std::complex<double>;

enum class Direction : std::uint8_t { Uplink = 0, Downlink = 1 };

inline const char* to_string(Direction d) { return d == Direction::Uplink ? "uplink" : "downlink"; }

/// M x N grid of complex channel snapshots: column n is the time series of
/// node n, row t is snapshot t. Immutable after construction.
class CsiMatrix {
public:
    CsiMatrix(Eigen::MatrixXcd data, Direction direction = Direction::Uplink,
              std::optional<double> snr_db = std::nullopt)
        : data_(std::move(data)), direction_(direction), snr_db_(snr_db) {
        require(data_.rows() >= 1 && data_.cols() >= 1, ErrorKind::InvalidArgument,
                "CSI matrix needs at least one snapshot and one node");
        for (Eigen::Index j = 0; j < data_.cols(); ++j) {
            for (Eigen::Index i = 0; i < data_.rows(); ++i) {
                const Complex v = data_(i, j);
                require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorKind::NonFinite,
                        "CSI entry (" + std::to_string(i) + ", " + std::to_string(j) + ") is not finite");
            }
        }
    }

    std::size_t m() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t n() const { return static_cast<std::size_t>(data_.cols()); }
    Direction direction() const { return direction_; }
    const std::optional<double>& snr_db() const { return snr_db_; }
    const Eigen::MatrixXcd& data() const { return data_; }
    Complex operator()(std::size_t t, std::size_t node) const {
        return data_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(node));
    }

    friend bool operator==(const CsiMatrix& a, const CsiMatrix& b) {
        const bool same_snr = a.snr_db_.has_value() == b.snr_db_.has_value() &&
                              (!a.snr_db_ || *a.snr_db_ == *b.snr_db_);
        return a.direction_ == b.direction_ && same_snr && a.data_.rows() == b.data_.rows() &&
               a.data_.cols() == b.data_.cols() && a.data_ == b.data_;
    }

private:
    Eigen::MatrixXcd data_;
    Direction direction_;
    std::optional<double> snr_db_;
};

/// 2M x N real matrix: rows [0, M) hold real parts, rows [M, 2M) imaginary parts.
class RealView {
public:
    explicit RealView(Eigen::MatrixXd data) : data_(std::move(data)) {
        require(data_.rows() >= 2 && data_.rows() % 2 == 0 && data_.cols() >= 1, ErrorKind::ShapeMismatch,
                "real view needs an even, non-zero row count and at least one column");
    }

    std::size_t m() const { return static_cast<std::size_t>(data_.rows() / 2); }
    std::size_t n() const { return static_cast<std::size_t>(data_.cols()); }
    std::size_t features() const { return static_cast<std::size_t>(data_.rows()); }
    const Eigen::MatrixXd& data() const { return data_; }
    auto column(std::size_t node) const { return data_.col(static_cast<Eigen::Index>(node)); }

private:
    Eigen::MatrixXd data_;
};

inline RealView to_real_view(const CsiMatrix& csi) {
    const auto m = static_cast<Eigen::Index>(csi.m());
    Eigen::MatrixXd out(2 * m, csi.data().cols());
    out.topRows(m) = csi.data().real();
    out.bottomRows(m) = csi.data().imag();
    return RealView(std::move(out));
}

inline CsiMatrix to_csi(const RealView& view, Direction direction = Direction::Uplink,
                        std::optional<double> snr_db = std::nullopt) {
    const auto m = static_cast<Eigen::Index>(view.m());
    Eigen::MatrixXcd out(m, view.data().cols());
    out.real() = view.data().topRows(m);
    out.imag() = view.data().bottomRows(m);
    return CsiMatrix(std::move(out), direction, snr_db);
}

/// Node positions in metres; 2-D layouts use z = 0.
class NodeGeometry {
public:
    explicit NodeGeometry(std::vector<Eigen::Vector3d> positions) : positions_(std::move(positions)) {
        require(!positions_.empty(), ErrorKind::InvalidArgument, "geometry needs at least one node");
        for (const auto& p : positions_) {
            require(p.allFinite(), ErrorKind::NonFinite, "node position is not finite");
        }
        // Sorting a copy keeps the distinctness check O(N log N).
        auto sorted = positions_;
        std::sort(sorted.begin(), sorted.end(), [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
            return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
        });
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            require(sorted[i] != sorted[i - 1], ErrorKind::InvalidArgument, "node positions must be distinct");
        }
    }

    /// rows x cols lattice with the given spacing, node index = row * cols + col,
    /// x along columns and y along rows.
    static NodeGeometry grid(std::size_t rows, std::size_t cols, double spacing = 1.0,
                             Eigen::Vector2d origin = Eigen::Vector2d::Zero()) {
        require(rows >= 1 && cols >= 1 && spacing > 0.0 && std::isfinite(spacing), ErrorKind::InvalidArgument,
                "grid needs positive dimensions and spacing");
        std::vector<Eigen::Vector3d> positions;
        positions.reserve(rows * cols);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                positions.emplace_back(origin.x() + spacing * static_cast<double>(c),
                                       origin.y() + spacing * static_cast<double>(r), 0.0);
            }
        }
        return NodeGeometry(std::move(positions));
    }

    std::size_t size() const { return positions_.size(); }
    const std::vector<Eigen::Vector3d>& positions() const { return positions_; }
    const Eigen::Vector3d& position(std::size_t i) const { return positions_.at(i); }

    double distance(std::size_t a, std::size_t b) const { return (positions_.at(a) - positions_.at(b)).norm(); }

private:
    std::vector<Eigen::Vector3d> positions_;
};

/// The k nodes closest to `node`, excluding itself; equal distances resolve
/// to the lower index.
inline std::vector<std::size_t> nearest_neighbors(const NodeGeometry& geom, std::size_t node, std::size_t k) {
    const std::size_t n = geom.size();
    require(node < n, ErrorKind::InvalidArgument, "node index out of range");
    require(k < n, ErrorKind::InsufficientNodes,
            "requested " + std::to_string(k) + " neighbours among " + std::to_string(n) + " nodes");
    std::vector<std::pair<double, std::size_t>> candidates;
    candidates.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        if (j != node) {
            candidates.emplace_back((geom.position(j) - geom.position(node)).squaredNorm(), j);
        }
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = candidates[i].second;
    }
    return out;
}

using NeighborTable = std::vector<std::vector<std::size_t>>;

inline NeighborTable neighbor_table(const NodeGeometry& geom, std::size_t k) {
    NeighborTable table(geom.size());
    for (std::size_t i = 0; i < geom.size(); ++i) {
        table[i] = nearest_neighbors(geom, i, k);
    }
    return table;
}

/// Unordered node pairs {i, j} with j among the k nearest neighbours of i,
/// each listed once as (min, max) in ascending order.
inline std::vector<std::pair<std::size_t, std::size_t>> neighbor_pairs(const NodeGeometry& geom, std::size_t k) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < geom.size(); ++i) {
        for (std::size_t j : nearest_neighbors(geom, i, k)) {
            pairs.emplace_back(std::min(i, j), std::max(i, j));
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

} // namespace csid

#endif
