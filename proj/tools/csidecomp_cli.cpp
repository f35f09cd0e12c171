#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csidecomp/csidecomp.hpp"

using namespace csid;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    bool seed_set = false;
    unsigned threads = 0;
    std::string output_dir = ".";
    std::string config;
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

CsiMatrix read_csi_any(const std::string& path, Direction dir = Direction::Uplink) {
    return ends_with(path, ".csv") ? read_csi_csv_file(path, dir) : read_csi_file(path);
}

fs::path out_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.output_dir);
    return fs::path(g.output_dir) / name;
}

void write_json(const Globals& g, const std::string& name, const json& j) {
    const fs::path p = out_path(g, name);
    std::ofstream out(p, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + p.string() + "'");
    out << j.dump(2) << '\n';
    std::cout << j.dump(2) << '\n';
}

void write_csi(const Globals& g, const std::string& name, const CsiMatrix& csi) {
    write_csi_file(csi, out_path(g, name).string());
}

std::vector<std::size_t> parse_index_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        require(used == item.size(), ErrorKind::Parse, "'" + item + "' is not a node index");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

// Flags fill cfg first; the config file is applied afterwards and wins.
void resolve(const Globals& g, PipelineConfig& cfg) {
    if (g.seed_set) {
        apply_setting(cfg, "seed", std::to_string(g.seed));
    }
    if (!g.config.empty()) {
        apply_config_file(cfg, g.config);
    }
    if (g.threads > 0) {
        set_default_threads(g.threads);
    }
}

json fit_json(const FitResult& f) {
    const auto names = parameter_names(f.family);
    json params = json::object();
    for (int i = 0; i < f.k; ++i) {
        params[std::string(names[static_cast<std::size_t>(i)])] = f.params[static_cast<std::size_t>(i)];
    }
    return {{"family", std::string(to_string(f.family))},
            {"params", params},
            {"k", f.k},
            {"log_likelihood", f.log_likelihood},
            {"aic", f.aic},
            {"ks_stat", f.ks_stat},
            {"p_value", f.p_value}};
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power-domain CSI decomposition: fingerprinting and key-generation metrics"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Globals g;
    PipelineConfig cfg;

    app.add_option("--seed", g.seed, "Global seed")->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware)");
    app.add_option("--output-dir", g.output_dir, "Directory for output files");
    app.add_option("--config", g.config, "key = value file applied after the flags")->check(CLI::ExistingFile);

    auto sim_flags = [&](CLI::App* sub) {
        sub->add_option("--rows", cfg.sim.grid_rows, "Grid rows");
        sub->add_option("--cols", cfg.sim.grid_cols, "Grid columns");
        sub->add_option("--spacing", cfg.sim.grid_spacing_m, "Grid spacing in metres");
        sub->add_option("--m", cfg.sim.m, "Snapshots per node");
        sub->add_option("--snr-db", cfg.sim.snr_db, "SNR in dB");
        sub->add_option("--k-factor", cfg.sim.rician_k, "Rician K factor (linear)");
        sub->add_option("--speed", cfg.sim.speed_mps, "Speed in m/s");
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate uplink, downlink and noise-free CSI on a grid");
    sim_flags(sim);
    sim->callback([&] {
        resolve(g, cfg);
        const SimOutput out = simulate(cfg.sim);
        write_csi(g, "uplink.csi", out.uplink);
        write_csi(g, "downlink.csi", out.downlink);
        write_csi(g, "truth.csi", out.truth);
        write_geometry_file(out.geometry, out_path(g, "geometry.json").string());
        std::cout << json{{"m", out.uplink.m()}, {"n", out.uplink.n()}, {"noise_variance", out.noise_variance},
                          {"seed", cfg.sim.seed}}
                         .dump()
                  << '\n';
    });

    // decompose
    std::string input;
    std::string downlink;
    std::string geometry;
    auto* dec = app.add_subcommand("decompose", "PCA split into predictable and unpredictable bands");
    dec->add_option("--input", input, "Uplink CSI file (.csi or .csv)")->required();
    dec->add_option("--downlink", downlink, "Downlink CSI file projected with the uplink basis");
    dec->add_option("--d-hat", cfg.d_hat, "Predictable components");
    dec->add_option("--d1", cfg.d1, "First unpredictable component (1-based)");
    dec->add_option("--d2", cfg.d2, "Last unpredictable component (1-based)");
    dec->callback([&] {
        resolve(g, cfg);
        const CsiMatrix ul = read_csi_any(input);
        const RealView v = to_real_view(ul);
        const PcaBasis basis = fit_pca(v);
        const DecompConfig dc{cfg.d_hat, cfg.d1, cfg.d2};
        const Decomposition d = decompose(v, basis, dc);
        write_csi(g, "predictable.csi", to_csi(RealView(d.predictable)));
        write_csi(g, "unpredictable.csi", to_csi(RealView(d.unpredictable)));
        if (!downlink.empty()) {
            const Decomposition dd = decompose(to_real_view(read_csi_any(downlink, Direction::Downlink)), basis, dc);
            write_csi(g, "unpredictable_dl.csi", to_csi(RealView(dd.unpredictable), Direction::Downlink));
        }
        write_json(g, "decompose.json", {{"d_hat", cfg.d_hat}, {"d1", cfg.d1}, {"d2", cfg.d2},
                                         {"eigenvalues", vector_json(basis.eigenvalues)}});
    });

    // kpca
    double gamma = 0.0;
    double sigma = 0.0;
    std::string variant = "as-written";
    auto* kp = app.add_subcommand("kpca", "Kernel PCA predictable reconstruction");
    kp->add_option("--input", input, "Uplink CSI file")->required();
    kp->add_option("--downlink", downlink, "Downlink CSI file reconstructed with the uplink model");
    kp->add_option("--d-hat", cfg.d_hat, "Retained kernel components");
    kp->add_option("--gamma", gamma, "Ridge parameter");
    kp->add_option("--sigma", sigma, "Kernel bandwidth (default: median heuristic)");
    kp->add_option("--kernel-variant", variant, "as-written or standard")->check(CLI::IsMember({"as-written", "standard"}));
    kp->callback([&] {
        if (kp->count("--gamma")) cfg.kpca_gamma = gamma;
        if (kp->count("--sigma")) cfg.kpca_sigma = sigma;
        cfg.kpca_kernel = variant == "standard" ? KernelVariant::Standard : KernelVariant::AsWritten;
        resolve(g, cfg);
        const CsiMatrix ul = read_csi_any(input);
        const KpcaModel model = fit_kpca(ul, {cfg.d_hat, cfg.kpca_gamma, cfg.kpca_sigma, cfg.kpca_kernel});
        const KpcaReconstruction r = reconstruct_predictable(model, ul);
        write_csi(g, "predictable.csi", r.predictable);
        write_csi(g, "residual.csi", r.residual);
        std::vector<std::string> warnings = model.warnings;
        warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
        if (!downlink.empty()) {
            const KpcaReconstruction rd = reconstruct_predictable(model, read_csi_any(downlink, Direction::Downlink));
            write_csi(g, "residual_dl.csi", rd.residual);
        }
        write_json(g, "kpca.json", {{"d_hat", model.d_hat},
                                    {"sigma", model.sigma},
                                    {"gamma", r.gamma},
                                    {"score_sigma", r.score_sigma},
                                    {"asymmetry_norm", model.asymmetry_norm},
                                    {"condition_estimate", r.condition_estimate},
                                    {"eigenvalues", vector_json(model.eigenvalues)},
                                    {"warnings", warnings}});
    });

    // ae-train
    std::string loss_name = "e1";
    std::string weights_path = "ae.weights";
    auto* aet = app.add_subcommand("ae-train", "Train an autoencoder and write its weights");
    aet->add_option("--input", input, "CSI file")->required();
    aet->add_option("--geometry", geometry, "Geometry JSON (needed for e2)");
    aet->add_option("--loss", loss_name, "e1 or e2")->check(CLI::IsMember({"e1", "e2"}));
    aet->add_option("--d-hat", cfg.d_hat, "Bottleneck width");
    aet->add_option("--epochs", cfg.ae_epochs, "Epochs");
    aet->add_option("--batch", cfg.ae_batch, "Batch size");
    aet->add_option("--step", cfg.ae_step, "Adam step size");
    aet->add_option("--mu", cfg.ae_mu, "E1 weight inside E2");
    aet->add_option("--k", cfg.ae_k, "Neighbours per node for e2");
    aet->add_option("--weights", weights_path, "Weights file name inside the output directory");
    aet->callback([&] {
        resolve(g, cfg);
        const LossKind kind = loss_name == "e2" ? LossKind::E2DotProduct : LossKind::E1Mse;
        require(kind == LossKind::E1Mse || !geometry.empty(), ErrorKind::InvalidArgument, "e2 training needs --geometry");
        const RealView v = to_real_view(read_csi_any(input));
        TrainConfig tc;
        tc.loss = {kind, cfg.ae_mu};
        tc.step = cfg.ae_step;
        tc.batch = cfg.ae_batch;
        tc.epochs = cfg.ae_epochs;
        tc.seed = derive_seed(cfg.seed, 0x4145u);
        tc.k_neighbors = cfg.ae_k;
        std::optional<NeighborTable> nb;
        if (!geometry.empty()) {
            nb = neighbor_table(read_geometry_file(geometry), cfg.ae_k);
        }
        std::ofstream log(out_path(g, "train_log.jsonl"), std::ios::binary);
        const TrainResult r = train(v, cfg.d_hat, tc, nb ? &*nb : nullptr, [&](std::size_t epoch, double loss) {
            log << json{{"epoch", epoch}, {"loss", loss}}.dump() << '\n';
        });
        write_ae_model(r.model, out_path(g, weights_path).string());
        std::cout << json{{"epochs", r.epoch_loss.size()}, {"final_loss", r.epoch_loss.back()}}.dump() << '\n';
    });

    // ae-decompose
    auto* aed = app.add_subcommand("ae-decompose", "Split CSI with a trained autoencoder");
    aed->add_option("--input", input, "CSI file")->required();
    aed->add_option("--weights", weights_path, "Weights file")->required();
    aed->add_option("--geometry", geometry, "Geometry JSON (needed for e2 models)");
    aed->callback([&] {
        resolve(g, cfg);
        const AeModel model = read_ae_model(weights_path);
        require(!model.pair_input() || !geometry.empty(), ErrorKind::InvalidArgument, "e2 models need --geometry");
        std::optional<NeighborTable> nb;
        if (!geometry.empty()) {
            nb = neighbor_table(read_geometry_file(geometry), model.k_neighbors);
        }
        const CsiMatrix csi = read_csi_any(input);
        const AeDecomposition d = decompose_ae(model, to_real_view(csi), nb ? &*nb : nullptr);
        write_csi(g, "predictable.csi", to_csi(RealView(d.predictable), csi.direction()));
        write_csi(g, "unpredictable.csi", to_csi(RealView(d.unpredictable), csi.direction()));
    });

    // dhsic
    std::string nodes = "0,1";
    auto* dh = app.add_subcommand("dhsic", "dHSIC independence test between node CSI vectors");
    dh->add_option("--input", input, "CSI file")->required();
    dh->add_option("--nodes", nodes, "Comma-separated node indices (one variable each)");
    dh->add_option("--alpha", cfg.dhsic_alpha, "Test level");
    dh->add_option("--b", cfg.dhsic_b, "Monte-Carlo resamplings");
    dh->callback([&] {
        resolve(g, cfg);
        const RealView v = to_real_view(read_csi_any(input));
        std::vector<std::vector<double>> vars;
        for (std::size_t n : parse_index_list(nodes)) {
            require(n < static_cast<std::size_t>(v.data().cols()), ErrorKind::InvalidArgument, "node index " + std::to_string(n) + " out of range");
            const auto col = v.data().col(static_cast<Eigen::Index>(n));
            vars.emplace_back(col.data(), col.data() + col.size());
        }
        const DependenceReport rep = dhsic_test(DhsicInput(vars), cfg.dhsic_alpha, cfg.dhsic_b, cfg.seed);
        write_json(g, "dhsic.json", {{"statistic", rep.statistic},
                                     {"critical_value", rep.critical_value},
                                     {"delta_bar", rep.delta_bar},
                                     {"ratio", rep.ratio},
                                     {"alpha", rep.alpha},
                                     {"b", rep.b},
                                     {"reject", rep.reject},
                                     {"degenerate", rep.degenerate},
                                     {"warnings", rep.warnings}});
    });

    // tvd-curve
    std::size_t d_hat_max = 10;
    auto* tv = app.add_subcommand("tvd-curve", "Average neighbour TVD against the number of PCA components");
    tv->add_option("--input", input, "CSI file")->required();
    tv->add_option("--geometry", geometry, "Geometry JSON")->required();
    tv->add_option("--d-hat-max", d_hat_max, "Largest d_hat");
    tv->add_option("--bins", cfg.tvd_bins, "Histogram bins");
    tv->add_option("--neighbors", cfg.neighbors, "Neighbours per node");
    tv->callback([&] {
        resolve(g, cfg);
        const RealView v = to_real_view(read_csi_any(input));
        const NeighborTable nb = neighbor_table(read_geometry_file(geometry), cfg.neighbors);
        json arr = json::array();
        for (const TvdPoint& p : tvd_curve(v, fit_pca(v), nb, d_hat_max, cfg.tvd_bins)) {
            arr.push_back({{"d_hat", p.d_hat}, {"avg_tvd", p.avg_tvd}});
        }
        write_json(g, "tvd_curve.json", arr);
    });

    // skg-mp
    std::string uplink;
    auto* mp = app.add_subcommand("skg-mp", "Mismatch probability of median-quantised uplink and downlink");
    mp->add_option("--uplink", uplink, "Uplink CSI file")->required();
    mp->add_option("--downlink", downlink, "Downlink CSI file")->required();
    mp->callback([&] {
        resolve(g, cfg);
        const MpReport rep = avg_mp(to_real_view(read_csi_any(uplink)).data(),
                                    to_real_view(read_csi_any(downlink, Direction::Downlink)).data());
        write_json(g, "skg_mp.json", {{"per_node_mp", rep.per_node_mp},
                                      {"avg_mp", rep.avg_mp},
                                      {"degenerate_nodes", rep.degenerate_nodes}});
    });

    // fit-dist
    std::string component = "amplitude";
    auto* fd = app.add_subcommand("fit-dist", "Fit amplitude or phase distributions, ranked by AIC");
    fd->add_option("--input", input, "CSI file")->required();
    fd->add_option("--component", component, "amplitude or phase")->check(CLI::IsMember({"amplitude", "phase"}));
    fd->callback([&] {
        resolve(g, cfg);
        const CsiMatrix csi = read_csi_any(input);
        std::vector<double> samples;
        samples.reserve(csi.m() * csi.n());
        for (Eigen::Index j = 0; j < csi.data().cols(); ++j) {
            for (Eigen::Index i = 0; i < csi.data().rows(); ++i) {
                const std::complex<double> h = csi.data()(i, j);
                samples.push_back(component == "amplitude" ? std::abs(h) : std::arg(h));
            }
        }
        json arr = json::array();
        for (const FitResult& f : fit_all(samples)) {
            arr.push_back(fit_json(f));
        }
        write_json(g, "fit_dist.json", arr);
    });

    // sweep
    std::size_t d1_min = 1, d1_max = 15, d2_min = 1, d2_max = 0, step = 2;
    bool with_delta = false;
    auto* sw = app.add_subcommand("sweep", "Metrics over a grid of unpredictable bands (d1, d2)");
    sw->add_option("--uplink", uplink, "Uplink CSI file")->required();
    sw->add_option("--downlink", downlink, "Downlink CSI file")->required();
    sw->add_option("--geometry", geometry, "Geometry JSON")->required();
    sw->add_option("--d1-min", d1_min, "Smallest d1");
    sw->add_option("--d1-max", d1_max, "Largest d1");
    sw->add_option("--d2-min", d2_min, "Smallest d2");
    sw->add_option("--d2-max", d2_max, "Largest d2 (default 2M)");
    sw->add_option("--step", step, "Grid step");
    sw->add_flag("--delta-bar", with_delta, "Also compute the average delta_bar per cell");
    sw->callback([&] {
        resolve(g, cfg);
        const RealView ul = to_real_view(read_csi_any(uplink));
        const RealView dl = to_real_view(read_csi_any(downlink, Direction::Downlink));
        const std::size_t full = static_cast<std::size_t>(ul.data().rows());
        SweepOptions so;
        so.cc_neighbors = cfg.neighbors;
        so.with_delta_bar = with_delta;
        so.delta_bar = delta_options(cfg);
        const auto grid = sweep(ul, dl, fit_pca(ul), read_geometry_file(geometry), step_grid(d1_min, d1_max, step),
                                step_grid(d2_min, d2_max == 0 ? full : d2_max, step), so);
        json arr = json::array();
        for (const SweepRecord& r : grid) {
            arr.push_back({{"d1", r.d1},
                           {"d2", r.d2},
                           {"avg_cc", r.avg_cc},
                           {"avg_mp", r.avg_mp},
                           {"delta_bar", r.delta_bar ? json(*r.delta_bar) : json()}});
        }
        write_json(g, "sweep.json", arr);
    });

    // run
    std::string method = "pca";
    auto* run = app.add_subcommand("run", "Full pipeline: simulate or load, decompose, evaluate, report");
    sim_flags(run);
    run->add_option("--method", method, "none, pca, kpca, ae1 or ae2");
    run->add_option("--d-hat", cfg.d_hat, "Predictable components");
    run->add_option("--d1", cfg.d1, "First unpredictable component");
    run->add_option("--d2", cfg.d2, "Last unpredictable component");
    run->add_option("--b", cfg.dhsic_b, "dHSIC resamplings");
    run->add_option("--max-pairs", cfg.dhsic_max_pairs, "Cap on dHSIC neighbour pairs (0 = all)");
    run->add_option("--epochs", cfg.ae_epochs, "Autoencoder epochs");
    run->callback([&] {
        cfg.method = parse_method(method);
        cfg.output_dir = g.output_dir;
        resolve(g, cfg);
        const PipelineResult r = run_pipeline(cfg);
        std::cout << r.report.dump(2) << '\n';
    });

    // compare
    std::vector<std::string> configs;
    auto* cmp = app.add_subcommand("compare", "Comparison table over configurations sharing one dataset");
    cmp->add_option("configs", configs, "Config files, one per row")->required()->check(CLI::ExistingFile);
    cmp->callback([&] {
        resolve(g, cfg);
        std::vector<PipelineConfig> cfgs;
        for (const auto& path : configs) {
            PipelineConfig c = cfg;
            apply_config_file(c, path);
            cfgs.push_back(c);
        }
        const auto rows = compare_methods(cfgs);
        const PipelineResult r = comparison_report(cfgs, rows);
        write_reports(g.output_dir, "comparison", r);
        std::cout << r.csv;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
