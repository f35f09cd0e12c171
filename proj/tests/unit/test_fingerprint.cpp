#include <gtest/gtest.h>

#include <random>

#include "csidecomp/channel_sim.hpp"
#include "csidecomp/fingerprint.hpp"
#include "oracles.hpp"

using namespace csid;

namespace {

EmpiricalMeasure measure(std::vector<double> probs) {
    EmpiricalMeasure m;
    m.bin_edges = uniform_edges(0.0, 1.0, probs.size());
    m.probs = std::move(probs);
    return m;
}

std::vector<double> random_probs(std::size_t bins, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(bins);
    double sum = 0.0;
    for (auto& v : p) {
        v = u(rng);
        sum += v;
    }
    for (auto& v : p) {
        v /= sum;
    }
    return p;
}

} // namespace

TEST(Histogram, SingleBinHoldsEverything) {
    const std::vector<double> x{0.1, 0.5, 0.9, 1.0};
    const EmpiricalMeasure mu = histogram(x, {0.0, 1.0});
    ASSERT_EQ(mu.probs.size(), 1u);
    EXPECT_DOUBLE_EQ(mu.probs[0], 1.0);
    EXPECT_EQ(mu.clipped, 0u);
}

TEST(Histogram, UniformSamplesFillBinsEvenly) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(1000000);
    for (auto& v : x) {
        v = u(rng);
    }
    const EmpiricalMeasure mu = histogram(x, uniform_edges(0.0, 1.0, 10));
    for (double p : mu.probs) {
        EXPECT_NEAR(p, 0.1, 0.005);
    }
}

TEST(Histogram, BinBoundariesAreHalfOpenExceptTheLast) {
    const std::vector<double> x{0.0, 0.5, 1.0};
    const EmpiricalMeasure mu = histogram(x, {0.0, 0.5, 1.0});
    EXPECT_DOUBLE_EQ(mu.probs[0], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(mu.probs[1], 2.0 / 3.0);
}

TEST(Histogram, OutOfRangeSamplesAreClippedAndCounted) {
    const std::vector<double> x{-5.0, 0.2, 0.7, 9.0};
    const EmpiricalMeasure mu = histogram(x, {0.0, 0.5, 1.0});
    EXPECT_EQ(mu.clipped, 2u);
    EXPECT_DOUBLE_EQ(mu.probs[0], 0.5);
    EXPECT_DOUBLE_EQ(mu.probs[1], 0.5);
}

TEST(Histogram, RejectsBadEdgesAndEmptyInput) {
    const std::vector<double> x{1.0};
    EXPECT_THROW(histogram(x, {}), Error);
    EXPECT_THROW(histogram(x, {0.0}), Error);
    EXPECT_THROW(histogram(x, {0.0, 0.0}), Error);
    EXPECT_THROW(histogram(std::vector<double>{}, {0.0, 1.0}), Error);
    EXPECT_THROW(uniform_edges(1.0, 1.0, 4), Error);
}

TEST(Tvd, WorkedValues) {
    EXPECT_DOUBLE_EQ(tvd(measure({0.5, 0.5}), measure({0.5, 0.5})), 0.0);
    EXPECT_DOUBLE_EQ(tvd(measure({1.0, 0.0}), measure({0.0, 1.0})), 1.0);
    EXPECT_DOUBLE_EQ(tvd(measure({0.5, 0.5}), measure({1.0, 0.0})), 0.5);
}

TEST(Tvd, DifferentGridsAreRejected) {
    EmpiricalMeasure a = measure({0.5, 0.5});
    EmpiricalMeasure b = measure({0.5, 0.5});
    b.bin_edges[1] = 0.4;
    try {
        tvd(a, b);
        FAIL() << "expected GridMismatch";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
    }
    EXPECT_THROW(tvd(measure({1.0}), measure({0.5, 0.5})), Error);
}

TEST(Tvd, MetricPropertiesOnRandomMeasures) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = measure(random_probs(7, rng));
        const auto b = measure(random_probs(7, rng));
        const auto c = measure(random_probs(7, rng));
        const double ab = tvd(a, b);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 1.0);
        EXPECT_DOUBLE_EQ(ab, tvd(b, a));
        EXPECT_LE(tvd(a, c), ab + tvd(b, c) + 1e-15);
    }
}

TEST(Tvd, InvariantUnderCommonBinPermutation) {
    std::mt19937_64 rng(3);
    auto p = random_probs(9, rng);
    auto q = random_probs(9, rng);
    const double base = tvd(measure(p), measure(q));
    std::vector<std::size_t> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pp(9);
    std::vector<double> qq(9);
    for (std::size_t i = 0; i < 9; ++i) {
        pp[i] = p[perm[i]];
        qq[i] = q[perm[i]];
    }
    EXPECT_NEAR(tvd(measure(pp), measure(qq)), base, 1e-15);
}

TEST(PairTvd, IdenticalAndDisjointSamples) {
    const std::vector<double> a{0.1, 0.2, 0.3, 0.9};
    const std::vector<double> b{2.1, 2.5, 2.7, 3.0};
    EXPECT_DOUBLE_EQ(pair_tvd(a, a, 8), 0.0);
    EXPECT_DOUBLE_EQ(pair_tvd(a, b, 8), 1.0);
    EXPECT_DOUBLE_EQ(pair_tvd(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0}, 8), 0.0);
}

TEST(AvgNeighborTvd, IdenticalChannelsGiveZero) {
    std::mt19937_64 rng(4);
    const Eigen::VectorXd col = oracle::random_matrix(50, 1, rng);
    const Eigen::MatrixXd fp = col.replicate(1, 9);
    EXPECT_DOUBLE_EQ(avg_neighbor_tvd(fp, neighbor_table(NodeGeometry::grid(3, 3), 8)), 0.0);
}

TEST(AvgNeighborTvd, NonOverlappingPairGivesOne) {
    Eigen::MatrixXd fp(4, 2);
    fp << 0.0, 5.0, 0.1, 5.1, 0.2, 5.2, 0.3, 5.3;
    EXPECT_DOUBLE_EQ(avg_neighbor_tvd(fp, neighbor_table(NodeGeometry::grid(1, 2), 1)), 1.0);
}

TEST(AvgNeighborTvd, NeighbourTableMustMatch) {
    EXPECT_THROW(avg_neighbor_tvd(Eigen::MatrixXd::Ones(4, 3), neighbor_table(NodeGeometry::grid(1, 2), 1)), Error);
}

TEST(Amplitudes, MatchComplexModulus) {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXcd h = oracle::random_complex(6, 4, rng);
    const Eigen::MatrixXd a = amplitudes(to_real_view(CsiMatrix(h)).data());
    EXPECT_LE((a - h.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-14);
    const Eigen::MatrixXd ph = phases(to_real_view(CsiMatrix(h)).data());
    EXPECT_LE((ph - h.cwiseArg()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TvdCurve, ShapeAndRawFirstPoint) {
    SimConfig cfg;
    cfg.grid_rows = 5;
    cfg.grid_cols = 5;
    cfg.m = 32;
    const SimOutput sim = simulate(cfg);
    const RealView ul = to_real_view(sim.uplink);
    const PcaBasis basis = fit_pca(ul);
    const NeighborTable nb = neighbor_table(sim.geometry, 8);
    const auto curve = tvd_curve(ul, basis, nb, 6, 16);
    ASSERT_EQ(curve.size(), 7u);
    for (std::size_t d = 0; d < curve.size(); ++d) {
        EXPECT_EQ(curve[d].d_hat, d);
        EXPECT_GE(curve[d].avg_tvd, 0.0);
        EXPECT_LE(curve[d].avg_tvd, 1.0);
    }
    EXPECT_DOUBLE_EQ(curve[0].avg_tvd, avg_neighbor_tvd(amplitudes(ul.data()), nb, 16));
    EXPECT_THROW(tvd_curve(ul, basis, nb, 65), Error);
}
