#ifndef CSIDECOMP_SWEEP_HPP
#define CSIDECOMP_SWEEP_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "csidecomp/csi.hpp"
#include "csidecomp/metrics.hpp"
#include "csidecomp/parallel.hpp"
#include "csidecomp/pca.hpp"
#include "csidecomp/skg.hpp"

namespace csid {

/// lo, lo + step, ... up to and including hi when it lands on the step.
inline std::vector<std::size_t> step_grid(std::size_t lo, std::size_t hi, std::size_t step = 2) {
    require(step >= 1, ErrorKind::InvalidArgument, "grid step must be >= 1");
    require(lo >= 1 && lo <= hi, ErrorKind::InvalidArgument, "grid bounds must satisfy 1 <= lo <= hi");
    std::vector<std::size_t> out;
    for (std::size_t v = lo; v <= hi; v += step) {
        out.push_back(v);
    }
    return out;
}

struct SweepRecord {
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    double avg_cc = 0.0;
    double avg_mp = 0.0;
    std::optional<double> delta_bar;
};

struct SweepOptions {
    std::size_t cc_neighbors = 8;
    bool with_delta_bar = false;
    DeltaBarOptions delta_bar;
};

/// Metrics of the unpredictable band [d1, d2] for every d1 <= d2 in the grids,
/// ordered by (d1, d2). Both directions are centred with the uplink basis.
inline std::vector<SweepRecord> sweep(const RealView& uplink, const RealView& downlink, const PcaBasis& basis,
                                      const NodeGeometry& geom, std::vector<std::size_t> d1_grid,
                                      std::vector<std::size_t> d2_grid, const SweepOptions& opts = {}) {
    require(!d1_grid.empty() && !d2_grid.empty(), ErrorKind::InvalidArgument, "sweep grids must be non-empty");
    require(uplink.features() == basis.dims() && downlink.features() == basis.dims() && uplink.n() == downlink.n(),
            ErrorKind::ShapeMismatch, "uplink, downlink and basis dimensions disagree");
    require(geom.size() == uplink.n(), ErrorKind::ShapeMismatch, "geometry does not match node count");
    std::sort(d1_grid.begin(), d1_grid.end());
    std::sort(d2_grid.begin(), d2_grid.end());
    std::vector<SweepRecord> cells;
    for (std::size_t d1 : d1_grid) {
        for (std::size_t d2 : d2_grid) {
            if (d1 <= d2) {
                DecompConfig{0, d1, d2}.validate(basis.dims());
                cells.push_back({d1, d2, 0.0, 0.0, std::nullopt});
            }
        }
    }

    const Eigen::MatrixXd ul = uplink.data().colwise() - basis.mean;
    const Eigen::MatrixXd dl = downlink.data().colwise() - basis.mean;
    const NeighborTable neighbors = neighbor_table(geom, opts.cc_neighbors);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (opts.with_delta_bar) {
        pairs = subsample_pairs(neighbor_pairs(geom, opts.delta_bar.k), opts.delta_bar.max_pairs);
    }
    parallel_for(cells.size(), [&](std::size_t c) {
        SweepRecord& rec = cells[c];
        const Eigen::MatrixXd u = project_band(basis, ul, rec.d1, rec.d2);
        const Eigen::MatrixXd v = project_band(basis, dl, rec.d1, rec.d2);
        rec.avg_cc = avg_neighbor_cc(u, neighbors).avg_cc;
        rec.avg_mp = avg_mp(u, v).avg_mp;
        if (opts.with_delta_bar) {
            rec.delta_bar = avg_delta_bar(u, pairs, opts.delta_bar).avg_delta_bar;
        }
    });
    return cells;
}

} // namespace csid

#endif
