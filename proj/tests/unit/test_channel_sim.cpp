#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "csidecomp/channel_sim.hpp"
#include "csidecomp/dist_fit.hpp"
#include "oracles.hpp"

using namespace csid;

namespace {

SimConfig small_config(std::uint64_t seed = 1) {
    SimConfig cfg;
    cfg.grid_rows = 6;
    cfg.grid_cols = 5;
    cfg.m = 64;
    cfg.seed = seed;
    return cfg;
}

std::vector<double> flatten(const Eigen::MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

} // namespace

TEST(Simulate, NoiselessUplinkEqualsDownlink) {
    SimConfig cfg = small_config();
    cfg.snr_db = std::numeric_limits<double>::infinity();
    const SimOutput out = simulate(cfg);
    EXPECT_TRUE(out.uplink.data() == out.downlink.data());
    EXPECT_TRUE(out.uplink.data() == out.truth.data());
    EXPECT_EQ(out.noise_variance, 0.0);
}

TEST(Simulate, PureLosHasConstantAmplitudeEqualToPathLoss) {
    SimConfig cfg = small_config();
    cfg.rician_k = std::numeric_limits<double>::infinity();
    cfg.shadowing_sigma_db = 0.0;
    const SimOutput out = simulate(cfg);
    const NodeGeometry g = cfg.geometry();
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double gain = out.large_scale_gain(static_cast<Eigen::Index>(n));
        for (std::size_t t = 0; t < cfg.m; ++t) {
            EXPECT_NEAR(std::abs(out.truth(t, n)), gain, 1e-12);
        }
        // path loss only: gain_n / gain_0 = (d_n / d_0)^(-exponent / 2)
        const double dn = (g.position(n) - cfg.bs_position).norm();
        const double d0 = (g.position(0) - cfg.bs_position).norm();
        EXPECT_NEAR(gain / out.large_scale_gain(0), std::pow(dn / d0, -cfg.path_loss_exponent / 2.0), 1e-12);
    }
}

TEST(Simulate, GainsAreNormalisedToUnitMeanPower) {
    const SimOutput out = simulate(small_config(4));
    EXPECT_NEAR(out.large_scale_gain.squaredNorm() / static_cast<double>(out.large_scale_gain.size()), 1.0, 1e-12);
    EXPECT_NEAR(out.noise_variance, std::pow(10.0, -2.0), 1e-15);
}

TEST(Simulate, SameSeedIsBitIdentical) {
    const SimOutput a = simulate(small_config(9));
    const SimOutput b = simulate(small_config(9));
    EXPECT_TRUE(a.uplink == b.uplink);
    EXPECT_TRUE(a.downlink == b.downlink);
    EXPECT_TRUE(a.truth == b.truth);
    const SimOutput c = simulate(small_config(10));
    EXPECT_FALSE(a.uplink == c.uplink);
}

TEST(Simulate, OutputIndependentOfThreadCount) {
    set_default_threads(1);
    const SimOutput a = simulate(small_config(21));
    set_default_threads(4);
    const SimOutput b = simulate(small_config(21));
    set_default_threads(0);
    EXPECT_TRUE(a.uplink == b.uplink);
    EXPECT_TRUE(a.downlink == b.downlink);
}

TEST(Simulate, NoiseDrawsAreIndependentAcrossDirections) {
    SimConfig cfg;
    cfg.m = 256;
    cfg.snr_db = 10.0;
    const SimOutput out = simulate(cfg); // 400 nodes x 256 snapshots x re/im > 1e5 samples
    const Eigen::MatrixXcd nu = out.uplink.data() - out.truth.data();
    const Eigen::MatrixXcd nd = out.downlink.data() - out.truth.data();
    const Eigen::MatrixXd ru = nu.real();
    const Eigen::MatrixXd rd = nd.real();
    EXPECT_LT(std::abs(oracle::pearson(flatten(ru), flatten(rd))), 0.05);
    // and the empirical noise power matches the configured variance
    EXPECT_NEAR(nu.squaredNorm() / static_cast<double>(nu.size()), out.noise_variance, 0.05 * out.noise_variance);
}

TEST(Simulate, ReciprocityImprovesWithSnr) {
    double previous = -1.0;
    for (double snr : {0.0, 10.0, 20.0, 40.0}) {
        SimConfig cfg = small_config(3);
        cfg.snr_db = snr;
        const SimOutput out = simulate(cfg);
        const double cc = oracle::pearson(flatten(to_real_view(out.uplink).data()), flatten(to_real_view(out.downlink).data()));
        EXPECT_GT(cc, previous) << "snr " << snr;
        previous = cc;
    }
    EXPECT_GT(previous, 0.999);
}

TEST(Shadowing, DistantNodesAreUncorrelated) {
    const NodeGeometry g({{0, 0, 0}, {200, 0, 0}});
    Rng rng = make_rng(77, 0);
    std::vector<double> a;
    std::vector<double> b;
    for (int i = 0; i < 10000; ++i) {
        const Eigen::VectorXd s = draw_shadowing_field(g, 6.0, 10.0, rng);
        a.push_back(s(0));
        b.push_back(s(1));
    }
    EXPECT_LT(std::abs(oracle::pearson(a, b)), 0.05);
}

TEST(Shadowing, CloseNodesFollowExponentialCorrelation) {
    const NodeGeometry g({{0, 0, 0}, {5, 0, 0}});
    Rng rng = make_rng(78, 0);
    std::vector<double> a;
    std::vector<double> b;
    double power = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Eigen::VectorXd s = draw_shadowing_field(g, 6.0, 10.0, rng);
        a.push_back(s(0));
        b.push_back(s(1));
        power += s(0) * s(0);
    }
    EXPECT_NEAR(oracle::pearson(a, b), std::exp(-0.5), 0.03);
    EXPECT_NEAR(std::sqrt(power / 10000.0), 6.0, 0.2);
}

TEST(Simulate, AmplitudePassesRicianKsTest) {
    int passes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SimConfig cfg;
        cfg.grid_rows = 1;
        cfg.grid_cols = 2;
        cfg.m = 256;
        cfg.seed = seed;
        // first zero of J0 makes successive snapshots uncorrelated
        cfg.snapshot_interval_s = 2.404825557695773 / (2.0 * std::numbers::pi * cfg.doppler_hz());
        const SimOutput out = simulate(cfg);
        std::vector<double> amp;
        for (std::size_t t = 0; t < cfg.m; ++t) {
            amp.push_back(std::abs(out.uplink(t, 0)));
        }
        const FitResult fit = fit_mle(amp, Family::Rician);
        passes += fit.p_value > 0.05;
    }
    EXPECT_GE(passes, 90);
}

TEST(Simulate, SmallScalePhaseIsUniform) {
    SimConfig cfg;
    cfg.rician_k = 0.0;
    cfg.snr_db = std::numeric_limits<double>::infinity();
    cfg.m = 4;
    const SimOutput out = simulate(cfg);
    std::vector<double> phase;
    for (std::size_t n = 0; n < out.truth.n(); ++n) {
        phase.push_back(std::arg(out.truth(0, n)));
    }
    const auto ks = ks_test(phase, [](double x) { return (x + std::numbers::pi) / (2.0 * std::numbers::pi); });
    EXPECT_GT(ks.p_value, 0.01);
}

TEST(Simulate, TemporalCorrelationMatchesJakesLagOne) {
    SimConfig cfg;
    EXPECT_NEAR(cfg.temporal_correlation(),
                std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * cfg.doppler_hz() * cfg.snapshot_interval_s), 0.0);
    EXPECT_NEAR(cfg.doppler_hz(), 0.5 * 2.68e9 / 299792458.0, 1e-12);
}

TEST(SimConfig, RejectsInvalidSettings) {
    SimConfig cfg;
    cfg.m = 1;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = SimConfig{};
    cfg.snr_db = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(cfg.validate(), Error);
    cfg = SimConfig{};
    cfg.grid_rows = 1;
    cfg.grid_cols = 1;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = SimConfig{};
    cfg.rician_k = -1.0;
    EXPECT_THROW(cfg.validate(), Error);
}
