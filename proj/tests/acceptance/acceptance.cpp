// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "csidecomp/csidecomp.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace csid;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> normals(std::size_t m, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<double> v(m);
    for (auto& x : v) x = g(rng);
    return v;
}

SimConfig sim_at(double snr_db, std::uint64_t seed) {
    SimConfig cfg;
    cfg.snr_db = snr_db;
    cfg.seed = seed;
    return cfg;
}

Outcome dhsic_oracle() {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    double slowest = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(trial % 2);
        const std::size_t m = 2 + static_cast<std::size_t>(trial % 19);
        std::vector<std::vector<double>> vars;
        for (std::size_t l = 0; l < d; ++l) vars.push_back(normals(m, rng));
        const auto t0 = std::chrono::steady_clock::now();
        const double fast = dhsic_statistic(DhsicInput(vars));
        slowest = std::max(slowest, seconds_since(t0));
        worst = std::max(worst, std::abs(fast - oracle::dhsic(vars)));
    }
    return {worst <= 1e-12 && slowest < 1.0,
            fmt("max |impl - oracle| = %.3g over 200 instances, slowest %.3g s", worst, slowest)};
}

Outcome dhsic_calibration() {
    std::mt19937_64 rng(202);
    const auto t0 = std::chrono::steady_clock::now();
    int rejections = 0;
    for (int t = 0; t < 1000; ++t) {
        const DhsicInput in({normals(100, rng), normals(100, rng)});
        rejections += dhsic_test(in, 0.05, 1000, derive_seed(202, static_cast<std::uint64_t>(t))).reject;
    }
    const double rate = rejections / 1000.0;
    return {rate >= 0.03 && rate <= 0.07, fmt("type-I error %.3f over 1000 trials (%.0f s)", rate, seconds_since(t0))};
}

Outcome dhsic_power() {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> g;
    int rejections = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        const auto x = normals(200, rng);
        std::vector<double> y(x);
        for (auto& v : y) v += 0.1 * g(rng);
        rejections += dhsic_test(DhsicInput({x, y}), 0.05, 1000, derive_seed(303, static_cast<std::uint64_t>(t))).reject;
    }
    const double rate = static_cast<double>(rejections) / trials;
    return {rate >= 0.99, fmt("rejection rate %.3f over %d trials", rate, trials)};
}

Outcome pca_identities() {
    const SimOutput sim = simulate(sim_at(20.0, 1));
    const RealView ul = to_real_view(sim.uplink);
    const PcaBasis basis = fit_pca(ul);
    const Eigen::MatrixXd centered = ul.data().colwise() - basis.mean;
    const std::size_t dims = basis.dims();
    double worst_rec = 0.0;
    double worst_orth = 0.0;
    for (std::size_t d_hat : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{20}, dims - 1}) {
        const Decomposition d = decompose(ul, basis, {d_hat, d_hat + 1, dims});
        worst_rec = std::max(worst_rec, (d.predictable + d.unpredictable - centered).norm() / centered.norm());
        for (Eigen::Index j = 0; j < centered.cols(); ++j) {
            const double scale = std::max(d.predictable.col(j).norm() * d.unpredictable.col(j).norm(), 1e-300);
            worst_orth = std::max(worst_orth, std::abs(d.predictable.col(j).dot(d.unpredictable.col(j))) / scale);
        }
    }
    return {worst_rec <= 1e-8 && worst_orth <= 1e-8,
            fmt("reconstruction error %.3g, orthogonality %.3g", worst_rec, worst_orth)};
}

Outcome ae_gradients() {
    const SimOutput sim = simulate(sim_at(20.0, 1));
    const RealView ul = to_real_view(sim.uplink);
    const std::size_t in = static_cast<std::size_t>(ul.data().rows());
    const Eigen::MatrixXd batch = ul.data().leftCols(8);

    const MlpSpec s1 = MlpSpec::table_iv(in, 4);
    const auto e1 = gradcheck::check(s1, init_weights(s1, 11), batch, {LossKind::E1Mse, 1.0}, 100, 12);

    const NeighborTable nb = neighbor_table(sim.geometry, 8);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t n = 0; n < 8; ++n) pairs.emplace_back(n, nb[n][0]);
    const Eigen::MatrixXd pair_batch = pair_samples(ul.data(), pairs);
    const MlpSpec s2 = MlpSpec::table_iv(2 * in, 4);
    const auto e2 = gradcheck::check(s2, init_weights(s2, 13), pair_batch, {LossKind::E2DotProduct, 1.0}, 100, 14);

    return {e1.checked == 100 && e2.checked == 100 && e1.max_rel_error <= 1e-4 && e2.max_rel_error <= 1e-4,
            fmt("max relative error E1 %.3g (%zu coords), E2 %.3g (%zu coords)", e1.max_rel_error, e1.checked,
                e2.max_rel_error, e2.checked)};
}

Outcome quantizer_mp() {
    std::mt19937_64 rng(606);
    const auto a = normals(10000, rng);
    const auto b = normals(10000, rng);
    const BitSequence qa = quantize_median(a);
    const double self = mismatch_probability(qa, qa);
    const double indep = mismatch_probability(qa, quantize_median(b));
    return {self == 0.0 && std::abs(indep - 0.5) <= 0.02, fmt("MP(a, a) = %g, MP(a, b) = %.4f", self, indep)};
}

Outcome tvd_peak() {
    int hits = 0;
    std::string argmaxes;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SimOutput sim = simulate(sim_at(20.0, seed));
        const RealView ul = to_real_view(sim.uplink);
        const auto curve = tvd_curve(ul, fit_pca(ul), neighbor_table(sim.geometry, 8), 10, 32);
        const auto best = std::max_element(curve.begin(), curve.end(),
                                           [](const TvdPoint& x, const TvdPoint& y) { return x.avg_tvd < y.avg_tvd; });
        hits += best->d_hat == 1;
        argmaxes += (argmaxes.empty() ? "" : ",") + std::to_string(best->d_hat);
    }
    return {hits >= 8, fmt("argmax D=1 on %d of 10 seeds (argmaxes %s)", hits, argmaxes.c_str())};
}

Outcome cc_drop() {
    const SimOutput sim = simulate(sim_at(20.0, 1));
    const RealView ul = to_real_view(sim.uplink);
    const RealView dl = to_real_view(sim.downlink);
    const NeighborTable nb = neighbor_table(sim.geometry, 8);
    const PcaBasis basis = fit_pca(ul);
    const Decomposition du = decompose(ul, basis, {2, 3, 20});
    const Decomposition dd = decompose(dl, basis, {2, 3, 20});
    const double raw_cc = avg_neighbor_cc(ul.data(), nb).avg_cc;
    const double band_cc = avg_neighbor_cc(du.unpredictable, nb).avg_cc;
    const double raw_mp = avg_mp(ul.data(), dl.data()).avg_mp;
    const double band_mp = avg_mp(du.unpredictable, dd.unpredictable).avg_mp;
    return {band_cc <= 0.7 * raw_cc && band_mp - raw_mp <= 0.05,
            fmt("CC %.4f -> %.4f, MP %.4f -> %.4f", raw_cc, band_cc, raw_mp, band_mp)};
}

Outcome noise_dominance() {
    const SimOutput sim = simulate(sim_at(5.0, 1));
    const RealView ul = to_real_view(sim.uplink);
    const RealView dl = to_real_view(sim.downlink);
    const std::size_t full = static_cast<std::size_t>(ul.data().rows());
    const auto grid = sweep(ul, dl, fit_pca(ul), sim.geometry, {1, 15}, {full});
    const double mp1 = grid[0].avg_mp;
    const double mp15 = grid[1].avg_mp;
    return {mp15 - mp1 >= 0.05, fmt("MP at d1=1: %.4f, at d1=15: %.4f", mp1, mp15)};
}

struct ComparisonRun {
    std::vector<ComparisonRow> rows;
    std::string error;
};

const ComparisonRun& comparison() {
    static const ComparisonRun run = [] {
        ComparisonRun r;
        try {
            std::vector<PipelineConfig> cfgs;
            for (Method m : {Method::Pca, Method::Kpca, Method::Ae1, Method::Ae2}) {
                PipelineConfig cfg;
                cfg.sim.snr_db = 20.0;
                cfg.method = m;
                cfg.d_hat = 1;
                cfg.dhsic_max_pairs = 40;
                cfgs.push_back(cfg);
            }
            r.rows = compare_methods(cfgs);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    }();
    return run;
}

Outcome residual_dependence() {
    const auto& run = comparison();
    if (!run.error.empty()) return {false, run.error};
    bool ok = true;
    std::string detail;
    for (const auto& row : run.rows) {
        ok = ok && *row.residual_delta_bar < *row.original_delta_bar;
        detail += fmt("%s %.3f<%.3f ", row.method.c_str(), *row.residual_delta_bar, *row.original_delta_bar);
    }
    return {ok, "residual vs original delta_bar: " + detail};
}

Outcome ae2_vs_ae1() {
    const auto& run = comparison();
    if (!run.error.empty()) return {false, run.error};
    const double ae1 = *run.rows[2].residual_cc;
    const double ae2 = *run.rows[3].residual_cc;
    return {ae2 <= ae1, fmt("residual CC AE1 %.4f, AE2 %.4f", ae1, ae2)};
}

Outcome rayleigh_fit() {
    const double sigma = 0.71;
    int rayleigh_first = 0;
    double worst_sigma = 0.0;
    std::string winners;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(derive_seed(1212, seed));
        std::normal_distribution<double> g(0.0, sigma);
        std::vector<double> x(100000);
        for (auto& v : x) v = std::hypot(g(rng), g(rng));
        const auto fits = fit_all(x);
        for (const auto& f : fits) {
            if (f.family == Family::Rayleigh) worst_sigma = std::max(worst_sigma, std::abs(f.params[0] - sigma));
        }
        if (fits.front().family == Family::Rayleigh) {
            ++rayleigh_first;
        } else {
            winners += std::string(winners.empty() ? "" : ",") + std::string(to_string(fits.front().family));
        }
    }
    return {worst_sigma <= 0.01 && rayleigh_first >= 90,
            fmt("max |sigma_hat - 0.71| = %.4f; Rayleigh minimum AIC in %d of 100 runs (others won by: %s)", worst_sigma,
                rayleigh_first, winners.empty() ? "none" : winners.c_str())};
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "csidecomp_acceptance_determinism";
    std::filesystem::remove_all(root);
    bool ok = true;
    std::string detail;
    for (Method m : {Method::None, Method::Pca, Method::Kpca, Method::Ae1, Method::Ae2}) {
        PipelineConfig cfg;
        cfg.sim.grid_rows = 10;
        cfg.sim.grid_cols = 10;
        cfg.sim.m = 64;
        cfg.method = m;
        cfg.ae_epochs = 20;
        cfg.dhsic_b = 200;
        cfg.dhsic_max_pairs = 10;
        cfg.seed = 77;
        cfg.sim.seed = 77;
        std::string first;
        for (int rep = 0; rep < 2; ++rep) {
            const auto dir = root / (std::string(to_string(m)) + std::to_string(rep));
            cfg.output_dir = dir.string();
            run_pipeline(cfg);
            const std::string bytes = read_file(dir / "report.json") + read_file(dir / "report.csv");
            if (rep == 0) {
                first = bytes;
            } else {
                const bool same = bytes == first && !bytes.empty();
                ok = ok && same;
                detail += std::string(to_string(m)) + (same ? ":identical " : ":DIFFERENT ");
            }
        }
    }
    std::filesystem::remove_all(root);
    return {ok, detail};
}

Outcome desk_budget() {
    PipelineConfig cfg; // 20x20 grid, M = 256, pca, all metrics, B = 1000
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = run_pipeline(cfg).report;
    const double secs = seconds_since(t0);
    return {secs < 600.0, fmt("full default pipeline took %.1f s on %u hardware threads (budget 600 s)", secs,
                              std::max(1u, std::thread::hardware_concurrency()))};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"dHSIC matches triple-loop oracle", dhsic_oracle},
        {"dHSIC type-I error calibrated", dhsic_calibration},
        {"dHSIC power on noisy duplicates", dhsic_power},
        {"PCA reconstruction and orthogonality", pca_identities},
        {"autoencoder gradient check", ae_gradients},
        {"quantizer and mismatch probability", quantizer_mp},
        {"TVD peaks at D=1", tvd_peak},
        {"unpredictable band lowers neighbour CC", cc_drop},
        {"noise dominance raises MP", noise_dominance},
        {"residual dependence below original", residual_dependence},
        {"AE2 residual CC not above AE1", ae2_vs_ae1},
        {"Rayleigh fit and AIC selection", rayleigh_fit},
        {"byte-identical reruns", determinism},
        {"desk-scale runtime", desk_budget},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] criterion %zu: %s -- %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
