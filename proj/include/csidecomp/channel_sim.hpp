#ifndef CSIDECOMP_CHANNEL_SIM_HPP
#define CSIDECOMP_CHANNEL_SIM_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "csidecomp/csi.hpp"
#include "csidecomp/parallel.hpp"
#include "csidecomp/rng.hpp"

namespace csid {

inline constexpr double kSpeedOfLight = 299792458.0;

/// How the line-of-sight term is phased at each node.
enum class LosPhase {
    Calibrated, // zero phase, i.e. CSI referenced to the direct path
    Geometric,  // -2*pi*d/lambda from the base-station distance
};

struct SimConfig {
    std::size_t grid_rows = 20;
    std::size_t grid_cols = 20;
    double grid_spacing_m = 1.0;
    Eigen::Vector2d grid_origin{10.0, 10.0};
    Eigen::Vector3d bs_position{0.0, 0.0, 10.0};
    std::size_t m = 256;
    double carrier_hz = 2.68e9;
    double speed_mps = 0.5;
    double snapshot_interval_s = 5e-3;
    double rician_k = 4.0;           // +inf gives a pure LOS channel
    double path_loss_exponent = 3.5;
    double shadowing_sigma_db = 6.0;
    double shadowing_corr_m = 10.0;
    double snr_db = 20.0;            // +inf disables noise
    LosPhase los_phase = LosPhase::Calibrated;
    std::uint64_t seed = 1;

    void validate() const {
        require(grid_rows >= 1 && grid_cols >= 1 && grid_rows * grid_cols >= 2, ErrorKind::InvalidArgument,
                "grid must hold at least two nodes");
        require(grid_spacing_m > 0.0 && std::isfinite(grid_spacing_m), ErrorKind::InvalidArgument,
                "grid spacing must be positive");
        require(m >= 2, ErrorKind::InvalidArgument, "need at least two snapshots per node");
        require(carrier_hz > 0.0 && std::isfinite(carrier_hz), ErrorKind::InvalidArgument, "carrier must be positive");
        require(speed_mps >= 0.0 && std::isfinite(speed_mps), ErrorKind::InvalidArgument, "speed must be non-negative");
        require(snapshot_interval_s > 0.0 && std::isfinite(snapshot_interval_s), ErrorKind::InvalidArgument,
                "snapshot interval must be positive");
        require(rician_k >= 0.0 && !std::isnan(rician_k), ErrorKind::InvalidArgument, "Rician K must be >= 0");
        require(path_loss_exponent > 0.0 && std::isfinite(path_loss_exponent), ErrorKind::InvalidArgument,
                "path-loss exponent must be positive");
        require(shadowing_sigma_db >= 0.0 && std::isfinite(shadowing_sigma_db), ErrorKind::InvalidArgument,
                "shadowing sigma must be >= 0");
        require(shadowing_corr_m > 0.0 && std::isfinite(shadowing_corr_m), ErrorKind::InvalidArgument,
                "shadowing decorrelation distance must be positive");
        require(!std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity(), ErrorKind::InvalidArgument,
                "SNR must be finite or +inf");
        require(bs_position.allFinite() && grid_origin.allFinite(), ErrorKind::NonFinite, "positions must be finite");
    }

    NodeGeometry geometry() const { return NodeGeometry::grid(grid_rows, grid_cols, grid_spacing_m, grid_origin); }

    double doppler_hz() const { return speed_mps * carrier_hz / kSpeedOfLight; }

    /// One-step Gauss-Markov coefficient matching the Jakes autocorrelation
    /// J0(2*pi*fd*dt) at lag one.
    double temporal_correlation() const {
        return std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * doppler_hz() * snapshot_interval_s);
    }
};

struct SimOutput {
    CsiMatrix uplink;    // channel estimate at Bob
    CsiMatrix downlink;  // channel estimate at each Alice
    CsiMatrix truth;     // noise-free channel h_n[t]
    NodeGeometry geometry;
    Eigen::VectorXd large_scale_gain; // path loss x shadowing amplitude per node
    Eigen::VectorXd shadowing_db;
    double noise_variance;            // per complex sample
};

/// Zero-mean Gaussian field with covariance sigma^2 * exp(-|xi - xj| / corr),
/// drawn through a Cholesky factor of the covariance.
inline Eigen::VectorXd draw_shadowing_field(const NodeGeometry& geom, double sigma_db, double corr_m, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(geom.size());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (sigma_db == 0.0) {
        return out;
    }
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double c = sigma_db * sigma_db *
                             std::exp(-geom.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) / corr_m);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    }
    // Exponential kernels are PD for distinct points; the jitter covers round-off.
    cov.diagonal().array() += 1e-10 * sigma_db * sigma_db;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    require(llt.info() == Eigen::Success, ErrorKind::InvalidArgument, "shadowing covariance is not positive definite");
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i) = normal(rng);
    }
    out = llt.matrixL() * z;
    return out;
}

/// Composite fading generator. Per node: h_n[t] = L_n * (a * e^{j*theta_n} + b * z_n[t])
/// with L_n from path loss and shadowing, a^2 = K/(K+1), b^2 = 1/(K+1), and z_n a
/// unit-power complex Gauss-Markov process. Gains are normalised so the mean
/// channel power over nodes is one, which makes the noise variance 10^(-snr/10).
/// Both directions see the same h; each estimate is (h*s + noise)/s with a BPSK
/// pilot s shared by the two directions.
inline SimOutput simulate(const SimConfig& cfg) {
    cfg.validate();
    NodeGeometry geom = cfg.geometry();
    const std::size_t n = geom.size();
    const std::size_t m = cfg.m;

    Rng shadow_rng = make_rng(cfg.seed, 0);
    Eigen::VectorXd shadowing = draw_shadowing_field(geom, cfg.shadowing_sigma_db, cfg.shadowing_corr_m, shadow_rng);

    Eigen::VectorXd gain(static_cast<Eigen::Index>(n));
    Eigen::VectorXd bs_distance(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (geom.position(i) - cfg.bs_position).norm();
        require(d > 0.0, ErrorKind::InvalidArgument, "node coincides with the base station");
        const auto idx = static_cast<Eigen::Index>(i);
        bs_distance(idx) = d;
        gain(idx) = std::pow(d, -cfg.path_loss_exponent / 2.0) * std::pow(10.0, shadowing(idx) / 20.0);
    }
    gain /= std::sqrt(gain.squaredNorm() / static_cast<double>(n));

    const bool pure_los = std::isinf(cfg.rician_k);
    const double los_amp = pure_los ? 1.0 : std::sqrt(cfg.rician_k / (cfg.rician_k + 1.0));
    const double diffuse_amp = pure_los ? 0.0 : std::sqrt(1.0 / (cfg.rician_k + 1.0));
    const double rho = cfg.temporal_correlation();
    const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double wavelength = kSpeedOfLight / cfg.carrier_hz;

    const bool noiseless = std::isinf(cfg.snr_db);
    const double noise_var = noiseless ? 0.0 : std::pow(10.0, -cfg.snr_db / 10.0);
    const double noise_std = std::sqrt(noise_var / 2.0);

    std::vector<double> pilot(m);
    {
        Rng pilot_rng = make_rng(cfg.seed, 4);
        std::bernoulli_distribution coin(0.5);
        for (auto& s : pilot) {
            s = coin(pilot_rng) ? 1.0 : -1.0;
        }
    }

    const auto mi = static_cast<Eigen::Index>(m);
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd h(mi, ni);
    Eigen::MatrixXcd ul(mi, ni);
    Eigen::MatrixXcd dl(mi, ni);

    parallel_for(n, [&](std::size_t node) {
        const auto col = static_cast<Eigen::Index>(node);
        Rng fading_rng = make_rng(cfg.seed, 1, node);
        Rng ul_rng = make_rng(cfg.seed, 2, node);
        Rng dl_rng = make_rng(cfg.seed, 3, node);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double theta =
            cfg.los_phase == LosPhase::Geometric ? -2.0 * std::numbers::pi * bs_distance(col) / wavelength : 0.0;
        const Complex los = los_amp * std::polar(1.0, theta);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        Complex z(normal(fading_rng) * inv_sqrt2, normal(fading_rng) * inv_sqrt2);
        for (std::size_t t = 0; t < m; ++t) {
            if (t > 0) {
                const Complex w(normal(fading_rng) * inv_sqrt2, normal(fading_rng) * inv_sqrt2);
                z = rho * z + innovation * w;
            }
            const auto row = static_cast<Eigen::Index>(t);
            const Complex channel = gain(col) * (los + diffuse_amp * z);
            h(row, col) = channel;
            if (noiseless) {
                ul(row, col) = channel;
                dl(row, col) = channel;
            } else {
                const Complex noise_ul(noise_std * normal(ul_rng), noise_std * normal(ul_rng));
                const Complex noise_dl(noise_std * normal(dl_rng), noise_std * normal(dl_rng));
                // zero-forcing: (h*s + n)/s
                ul(row, col) = (channel * pilot[t] + noise_ul) / pilot[t];
                dl(row, col) = (channel * pilot[t] + noise_dl) / pilot[t];
            }
        }
    });

    std::optional<double> snr_tag = cfg.snr_db;
    return SimOutput{CsiMatrix(std::move(ul), Direction::Uplink, snr_tag),
                     CsiMatrix(std::move(dl), Direction::Downlink, snr_tag),
                     CsiMatrix(std::move(h), Direction::Uplink, std::nullopt),
                     std::move(geom),
                     std::move(gain),
                     std::move(shadowing),
                     noise_var};
}

} // namespace csid

#endif
