#ifndef CSIDECOMP_PIPELINE_HPP
#define CSIDECOMP_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "csidecomp/autoencoder.hpp"
#include "csidecomp/channel_sim.hpp"
#include "csidecomp/csi.hpp"
#include "csidecomp/csi_io.hpp"
#include "csidecomp/fingerprint.hpp"
#include "csidecomp/kpca.hpp"
#include "csidecomp/metrics.hpp"
#include "csidecomp/pca.hpp"
#include "csidecomp/skg.hpp"

namespace csid {

inline constexpr const char* kVersion = "0.1.0";

enum class Method { None, Pca, Kpca, Ae1, Ae2 };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::None: return "none";
        case Method::Pca: return "pca";
        case Method::Kpca: return "kpca";
        case Method::Ae1: return "ae1";
        case Method::Ae2: return "ae2";
    }
    return "unknown";
}

inline Method parse_method(const std::string& s) {
    if (s == "none") return Method::None;
    if (s == "pca") return Method::Pca;
    if (s == "kpca") return Method::Kpca;
    if (s == "ae1") return Method::Ae1;
    if (s == "ae2") return Method::Ae2;
    throw Error(ErrorKind::Parse, "unknown method '" + s + "' (expected none, pca, kpca, ae1 or ae2)");
}

struct MetricSet {
    bool tvd = true;
    bool cc = true;
    bool delta_bar = true;
    bool mp = true;
};

struct PipelineConfig {
    bool simulate = true;
    SimConfig sim;
    std::string uplink_path;
    std::string downlink_path;
    std::string geometry_path;

    Method method = Method::Pca;
    std::size_t d_hat = 1;
    std::size_t d1 = 3;
    std::size_t d2 = 20;

    std::optional<double> kpca_gamma;
    std::optional<double> kpca_sigma;
    KernelVariant kpca_kernel = KernelVariant::AsWritten;

    std::size_t ae_epochs = 200;
    std::size_t ae_batch = 32;
    double ae_step = 1e-3;
    double ae_mu = 1.0;
    std::size_t ae_k = 8;
    TrainingMode ae_mode = TrainingMode::Centralized;

    MetricSet metrics;
    std::size_t neighbors = 8;
    std::size_t tvd_bins = 32;
    double dhsic_alpha = 0.05;
    std::size_t dhsic_b = 1000;
    std::size_t dhsic_k = 1;
    std::size_t dhsic_max_pairs = 0;

    std::uint64_t seed = 1;
    std::string output_dir;

    void validate() const {
        if (simulate) {
            sim.validate();
        } else {
            require(!uplink_path.empty() && !downlink_path.empty() && !geometry_path.empty(), ErrorKind::InvalidArgument,
                    "file input needs uplink, downlink and geometry paths");
        }
        require(d1 >= 1 && d1 <= d2, ErrorKind::InvalidArgument, "need 1 <= d1 <= d2");
        require(method != Method::Kpca || d_hat >= 1, ErrorKind::InvalidArgument, "kpca needs d_hat >= 1");
        require((method != Method::Ae1 && method != Method::Ae2) || d_hat >= 1, ErrorKind::InvalidArgument,
                "autoencoder bottleneck d_hat must be >= 1");
        require(ae_epochs >= 1 && ae_batch >= 1 && ae_step > 0.0 && ae_mu >= 0.0 && ae_k >= 1,
                ErrorKind::InvalidArgument, "invalid autoencoder training parameters");
        require(neighbors >= 1 && tvd_bins >= 1, ErrorKind::InvalidArgument, "neighbours and bins must be >= 1");
        require(dhsic_alpha > 0.0 && dhsic_alpha < 1.0 && dhsic_b >= 100 && dhsic_k >= 1, ErrorKind::InvalidArgument,
                "dhsic needs 0 < alpha < 1, b >= 100, k >= 1");
        if (kpca_gamma) {
            require(*kpca_gamma > 0.0, ErrorKind::InvalidArgument, "kpca gamma must be positive");
        }
        if (kpca_sigma) {
            require(*kpca_sigma > 0.0, ErrorKind::InvalidArgument, "kpca sigma must be positive");
        }
    }
};

namespace pipeline_detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == v.size() && !v.empty(), ErrorKind::Parse, key + ": expected a number, got '" + v + "'");
    return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    std::uint64_t out = 0;
    try {
        out = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == v.size() && !v.empty() && v.front() != '-', ErrorKind::Parse,
            key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorKind::Parse, key + ": expected true or false, got '" + v + "'");
}

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline nlohmann::json number_json(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

} // namespace pipeline_detail

/// Applies one flat `key = value` setting. Keys are listed in the README.
inline void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    using namespace pipeline_detail;
    const std::string& v = value;
    if (key == "source") {
        require(v == "simulate" || v == "files", ErrorKind::Parse, "source must be simulate or files");
        cfg.simulate = v == "simulate";
    } else if (key == "uplink") cfg.uplink_path = v;
    else if (key == "downlink") cfg.downlink_path = v;
    else if (key == "geometry") cfg.geometry_path = v;
    else if (key == "sim.rows") cfg.sim.grid_rows = to_u64(key, v);
    else if (key == "sim.cols") cfg.sim.grid_cols = to_u64(key, v);
    else if (key == "sim.spacing") cfg.sim.grid_spacing_m = to_double(key, v);
    else if (key == "sim.m") cfg.sim.m = to_u64(key, v);
    else if (key == "sim.carrier_hz") cfg.sim.carrier_hz = to_double(key, v);
    else if (key == "sim.speed") cfg.sim.speed_mps = to_double(key, v);
    else if (key == "sim.interval") cfg.sim.snapshot_interval_s = to_double(key, v);
    else if (key == "sim.k_factor") cfg.sim.rician_k = to_double(key, v);
    else if (key == "sim.path_loss_exponent") cfg.sim.path_loss_exponent = to_double(key, v);
    else if (key == "sim.shadowing_db") cfg.sim.shadowing_sigma_db = to_double(key, v);
    else if (key == "sim.shadowing_corr") cfg.sim.shadowing_corr_m = to_double(key, v);
    else if (key == "sim.snr_db") cfg.sim.snr_db = to_double(key, v);
    else if (key == "sim.los_phase") {
        require(v == "calibrated" || v == "geometric", ErrorKind::Parse, "sim.los_phase must be calibrated or geometric");
        cfg.sim.los_phase = v == "calibrated" ? LosPhase::Calibrated : LosPhase::Geometric;
    } else if (key == "method") cfg.method = parse_method(v);
    else if (key == "d_hat") cfg.d_hat = to_u64(key, v);
    else if (key == "d1") cfg.d1 = to_u64(key, v);
    else if (key == "d2") cfg.d2 = to_u64(key, v);
    else if (key == "kpca.gamma") cfg.kpca_gamma = to_double(key, v);
    else if (key == "kpca.sigma") cfg.kpca_sigma = to_double(key, v);
    else if (key == "kpca.kernel") {
        require(v == "as-written" || v == "standard", ErrorKind::Parse, "kpca.kernel must be as-written or standard");
        cfg.kpca_kernel = v == "standard" ? KernelVariant::Standard : KernelVariant::AsWritten;
    } else if (key == "ae.epochs") cfg.ae_epochs = to_u64(key, v);
    else if (key == "ae.batch") cfg.ae_batch = to_u64(key, v);
    else if (key == "ae.step") cfg.ae_step = to_double(key, v);
    else if (key == "ae.mu") cfg.ae_mu = to_double(key, v);
    else if (key == "ae.k") cfg.ae_k = to_u64(key, v);
    else if (key == "ae.mode") {
        require(v == "centralized" || v == "localized", ErrorKind::Parse, "ae.mode must be centralized or localized");
        cfg.ae_mode = v == "centralized" ? TrainingMode::Centralized : TrainingMode::Localized;
    } else if (key == "metrics") {
        cfg.metrics = {false, false, false, false};
        std::stringstream list(v);
        std::string item;
        while (std::getline(list, item, ',')) {
            item = trim(item);
            if (item == "tvd") cfg.metrics.tvd = true;
            else if (item == "cc") cfg.metrics.cc = true;
            else if (item == "delta_bar") cfg.metrics.delta_bar = true;
            else if (item == "mp") cfg.metrics.mp = true;
            else if (!item.empty()) throw Error(ErrorKind::Parse, "unknown metric '" + item + "'");
        }
    } else if (key == "neighbors") cfg.neighbors = to_u64(key, v);
    else if (key == "tvd.bins") cfg.tvd_bins = to_u64(key, v);
    else if (key == "dhsic.alpha") cfg.dhsic_alpha = to_double(key, v);
    else if (key == "dhsic.b") cfg.dhsic_b = to_u64(key, v);
    else if (key == "dhsic.k") cfg.dhsic_k = to_u64(key, v);
    else if (key == "dhsic.max_pairs") cfg.dhsic_max_pairs = to_u64(key, v);
    else if (key == "seed") {
        cfg.seed = to_u64(key, v);
        cfg.sim.seed = cfg.seed;
    } else if (key == "output_dir") cfg.output_dir = v;
    else throw Error(ErrorKind::Parse, "unknown configuration key '" + key + "'");
}

/// Reads `key = value` lines; blank lines and lines starting with '#' are ignored.
inline void apply_config_stream(PipelineConfig& cfg, std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = pipeline_detail::trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto eq = text.find('=');
        require(eq != std::string::npos, ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected key = value");
        try {
            apply_setting(cfg, pipeline_detail::trim(text.substr(0, eq)), pipeline_detail::trim(text.substr(eq + 1)));
        } catch (const Error& e) {
            throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.detail());
        }
    }
}

inline void apply_config_file(PipelineConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open config file '" + path + "'");
    apply_config_stream(cfg, in);
}

inline nlohmann::json dataset_json(const PipelineConfig& cfg) {
    using pipeline_detail::number_json;
    nlohmann::json j;
    if (cfg.simulate) {
        const SimConfig& s = cfg.sim;
        j["source"] = "simulate";
        j["sim"] = {{"rows", s.grid_rows},
                    {"cols", s.grid_cols},
                    {"spacing", s.grid_spacing_m},
                    {"m", s.m},
                    {"carrier_hz", s.carrier_hz},
                    {"speed", s.speed_mps},
                    {"interval", s.snapshot_interval_s},
                    {"k_factor", number_json(s.rician_k)},
                    {"path_loss_exponent", s.path_loss_exponent},
                    {"shadowing_db", s.shadowing_sigma_db},
                    {"shadowing_corr", s.shadowing_corr_m},
                    {"snr_db", number_json(s.snr_db)},
                    {"los_phase", s.los_phase == LosPhase::Calibrated ? "calibrated" : "geometric"},
                    {"seed", s.seed}};
    } else {
        j["source"] = "files";
        j["uplink"] = cfg.uplink_path;
        j["downlink"] = cfg.downlink_path;
        j["geometry"] = cfg.geometry_path;
    }
    return j;
}

/// Fully resolved configuration, echoed into every report.
inline nlohmann::json config_json(const PipelineConfig& cfg) {
    using pipeline_detail::optional_json;
    nlohmann::json j;
    j["dataset"] = dataset_json(cfg);
    j["method"] = to_string(cfg.method);
    j["d_hat"] = cfg.d_hat;
    j["d1"] = cfg.d1;
    j["d2"] = cfg.d2;
    j["kpca"] = {{"gamma", optional_json(cfg.kpca_gamma)},
                 {"sigma", optional_json(cfg.kpca_sigma)},
                 {"kernel", cfg.kpca_kernel == KernelVariant::AsWritten ? "as-written" : "standard"}};
    j["ae"] = {{"epochs", cfg.ae_epochs},
               {"batch", cfg.ae_batch},
               {"step", cfg.ae_step},
               {"mu", cfg.ae_mu},
               {"k", cfg.ae_k},
               {"mode", cfg.ae_mode == TrainingMode::Centralized ? "centralized" : "localized"}};
    std::vector<std::string> metrics;
    if (cfg.metrics.tvd) metrics.push_back("tvd");
    if (cfg.metrics.cc) metrics.push_back("cc");
    if (cfg.metrics.delta_bar) metrics.push_back("delta_bar");
    if (cfg.metrics.mp) metrics.push_back("mp");
    j["metrics"] = metrics;
    j["neighbors"] = cfg.neighbors;
    j["tvd"] = {{"bins", cfg.tvd_bins}};
    j["dhsic"] = {{"alpha", cfg.dhsic_alpha}, {"b", cfg.dhsic_b}, {"k", cfg.dhsic_k}, {"max_pairs", cfg.dhsic_max_pairs}};
    j["seed"] = cfg.seed;
    return j;
}

/// Runs fn and prefixes any library error with the pipeline stage name.
template <class Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("stage ") + stage + ": " + e.detail());
    }
}

struct Dataset {
    CsiMatrix uplink;
    CsiMatrix downlink;
    NodeGeometry geometry;
};

inline Dataset load_dataset(const PipelineConfig& cfg) {
    return run_stage("load", [&] {
        if (cfg.simulate) {
            SimOutput out = simulate(cfg.sim);
            return Dataset{std::move(out.uplink), std::move(out.downlink), std::move(out.geometry)};
        }
        Dataset d{read_csi_file(cfg.uplink_path), read_csi_file(cfg.downlink_path), read_geometry_file(cfg.geometry_path)};
        require(d.uplink.m() == d.downlink.m() && d.uplink.n() == d.downlink.n(), ErrorKind::ShapeMismatch,
                "uplink and downlink files differ in shape");
        require(d.geometry.size() == d.uplink.n(), ErrorKind::ShapeMismatch, "geometry does not match node count");
        return d;
    });
}

/// Real-view components per direction. An empty predictable part (d_hat = 0
/// or method none) means the raw measurements serve as fingerprints.
struct MethodOutput {
    std::optional<Eigen::MatrixXd> predictable_ul;
    Eigen::MatrixXd unpredictable_ul;
    Eigen::MatrixXd unpredictable_dl;
    std::vector<std::string> warnings;
    nlohmann::json details = nlohmann::json::object();
};

inline std::uint64_t stage_seed(const PipelineConfig& cfg, std::uint64_t stream) { return derive_seed(cfg.seed, stream); }

inline MethodOutput apply_method(const PipelineConfig& cfg, const Dataset& data) {
    return run_stage("decompose", [&] {
        const RealView ul = to_real_view(data.uplink);
        const RealView dl = to_real_view(data.downlink);
        MethodOutput out;
        switch (cfg.method) {
            case Method::None:
                out.unpredictable_ul = ul.data();
                out.unpredictable_dl = dl.data();
                break;
            case Method::Pca: {
                const PcaBasis basis = fit_pca(ul);
                const DecompConfig dc{cfg.d_hat, cfg.d1, cfg.d2};
                const Decomposition du = decompose(ul, basis, dc);
                const Decomposition dd = decompose(dl, basis, dc);
                if (cfg.d_hat > 0) {
                    out.predictable_ul = du.predictable;
                }
                out.unpredictable_ul = du.unpredictable;
                out.unpredictable_dl = dd.unpredictable;
                // The full band starting at the first component keeps the mean so
                // that the no-op split reproduces the raw signal.
                if (cfg.d1 == 1) {
                    out.unpredictable_ul.colwise() += basis.mean;
                    out.unpredictable_dl.colwise() += basis.mean;
                }
                out.details["eigenvalue_sum"] = basis.eigenvalues.sum();
                break;
            }
            case Method::Kpca: {
                const KpcaModel model = fit_kpca(data.uplink, {cfg.d_hat, cfg.kpca_gamma, cfg.kpca_sigma, cfg.kpca_kernel});
                const KpcaReconstruction ru = reconstruct_predictable(model, data.uplink);
                const KpcaReconstruction rd = reconstruct_predictable(model, data.downlink);
                out.predictable_ul = to_real_view(ru.predictable).data();
                out.unpredictable_ul = to_real_view(ru.residual).data();
                out.unpredictable_dl = to_real_view(rd.residual).data();
                out.warnings = model.warnings;
                out.warnings.insert(out.warnings.end(), ru.warnings.begin(), ru.warnings.end());
                out.details = {{"sigma", model.sigma},
                               {"gamma", ru.gamma},
                               {"d_hat", model.d_hat},
                               {"asymmetry_norm", model.asymmetry_norm},
                               {"condition_estimate", ru.condition_estimate}};
                break;
            }
            case Method::Ae1:
            case Method::Ae2: {
                TrainConfig tc;
                tc.loss = {cfg.method == Method::Ae1 ? LossKind::E1Mse : LossKind::E2DotProduct, cfg.ae_mu};
                tc.step = cfg.ae_step;
                tc.batch = cfg.ae_batch;
                tc.epochs = cfg.ae_epochs;
                tc.seed = stage_seed(cfg, 0x4145u);
                tc.mode = cfg.ae_mode;
                tc.k_neighbors = cfg.ae_k;
                const NeighborTable nb = neighbor_table(data.geometry, cfg.ae_k);
                const AeSidePair sides = train_sides(ul, dl, cfg.d_hat, tc, &nb);
                const AeDecomposition du = decompose_ae(sides.bob.model, ul, &nb);
                const AeDecomposition dd = decompose_ae(sides.alice.model, dl, &nb);
                out.predictable_ul = du.predictable;
                out.unpredictable_ul = du.unpredictable;
                out.unpredictable_dl = dd.unpredictable;
                out.details = {{"final_loss_bob", sides.bob.epoch_loss.back()},
                               {"final_loss_alice", sides.alice.epoch_loss.back()}};
                break;
            }
        }
        return out;
    });
}

struct OriginalMetrics {
    std::optional<double> cc;
    std::optional<double> delta_bar;
    std::optional<double> mp;
};

inline DeltaBarOptions delta_options(const PipelineConfig& cfg) {
    return {cfg.dhsic_k, cfg.dhsic_max_pairs, cfg.dhsic_alpha, cfg.dhsic_b, stage_seed(cfg, 0x44485349u)};
}

inline OriginalMetrics original_metrics(const PipelineConfig& cfg, const Dataset& data) {
    return run_stage("metrics", [&] {
        const Eigen::MatrixXd ul = to_real_view(data.uplink).data();
        OriginalMetrics m;
        if (cfg.metrics.cc) {
            m.cc = avg_neighbor_cc(ul, neighbor_table(data.geometry, cfg.neighbors)).avg_cc;
        }
        if (cfg.metrics.delta_bar) {
            m.delta_bar = avg_delta_bar(ul, data.geometry, delta_options(cfg)).avg_delta_bar;
        }
        if (cfg.metrics.mp) {
            m.mp = avg_mp(ul, to_real_view(data.downlink).data()).avg_mp;
        }
        return m;
    });
}

struct ResidualMetrics {
    std::optional<double> tvd;
    std::optional<double> cc;
    std::optional<double> delta_bar;
    std::optional<double> delta_ratio;
    std::optional<double> mp;
};

inline ResidualMetrics residual_metrics(const PipelineConfig& cfg, const Dataset& data, const MethodOutput& out) {
    return run_stage("metrics", [&] {
        ResidualMetrics m;
        const NeighborTable nb = neighbor_table(data.geometry, cfg.neighbors);
        if (cfg.metrics.tvd) {
            const Eigen::MatrixXd fp = out.predictable_ul ? *out.predictable_ul : to_real_view(data.uplink).data();
            m.tvd = avg_neighbor_tvd(amplitudes(fp), nb, cfg.tvd_bins);
        }
        if (cfg.metrics.cc) {
            m.cc = avg_neighbor_cc(out.unpredictable_ul, nb).avg_cc;
        }
        if (cfg.metrics.delta_bar) {
            const DeltaBarReport rep = avg_delta_bar(out.unpredictable_ul, data.geometry, delta_options(cfg));
            m.delta_bar = rep.avg_delta_bar;
            m.delta_ratio = rep.avg_ratio;
        }
        if (cfg.metrics.mp) {
            m.mp = avg_mp(out.unpredictable_ul, out.unpredictable_dl).avg_mp;
        }
        return m;
    });
}

struct PipelineResult {
    nlohmann::json report;
    std::string csv;
};

namespace pipeline_detail {

inline std::string format_value(const nlohmann::json& v) {
    if (v.is_null()) {
        return "";
    }
    if (v.is_number_float()) {
        std::ostringstream os;
        os << std::setprecision(17) << v.get<double>();
        return os.str();
    }
    return v.is_string() ? v.get<std::string>() : v.dump();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << text;
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path.string() + "'");
}

} // namespace pipeline_detail

inline void write_reports(const std::string& dir, const std::string& stem, const PipelineResult& result) {
    run_stage("report", [&] {
        std::filesystem::create_directories(dir);
        pipeline_detail::write_text(std::filesystem::path(dir) / (stem + ".json"), result.report.dump(2) + "\n");
        pipeline_detail::write_text(std::filesystem::path(dir) / (stem + ".csv"), result.csv);
    });
}

/// Load or simulate, decompose, evaluate. Writes report.json and report.csv
/// into cfg.output_dir when it is set.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
    run_stage("config", [&] { cfg.validate(); });
    const Dataset data = load_dataset(cfg);
    const MethodOutput out = apply_method(cfg, data);
    const OriginalMetrics orig = original_metrics(cfg, data);
    const ResidualMetrics res = residual_metrics(cfg, data, out);

    using pipeline_detail::optional_json;
    PipelineResult result;
    nlohmann::json& r = result.report;
    r["version"] = kVersion;
    r["config"] = config_json(cfg);
    r["seed"] = cfg.seed;
    r["dataset"] = {{"m", data.uplink.m()}, {"n", data.uplink.n()}};
    r["method_details"] = out.details;
    r["metrics"] = {{"avg_tvd", optional_json(res.tvd)},
                    {"original_cc", optional_json(orig.cc)},
                    {"residual_cc", optional_json(res.cc)},
                    {"original_delta_bar", optional_json(orig.delta_bar)},
                    {"residual_delta_bar", optional_json(res.delta_bar)},
                    {"residual_delta_ratio", optional_json(res.delta_ratio)},
                    {"original_mp", optional_json(orig.mp)},
                    {"residual_mp", optional_json(res.mp)}};
    r["warnings"] = out.warnings;

    std::ostringstream csv;
    csv << "metric,value\n";
    for (const auto& [key, value] : r["metrics"].items()) {
        csv << key << ',' << pipeline_detail::format_value(value) << '\n';
    }
    result.csv = csv.str();
    if (!cfg.output_dir.empty()) {
        write_reports(cfg.output_dir, "report", result);
    }
    return result;
}

struct ComparisonRow {
    std::string method;
    std::optional<double> original_cc;
    std::optional<double> residual_cc;
    std::optional<double> original_delta_bar;
    std::optional<double> residual_delta_bar;
    std::optional<double> mp;
};

/// One row per configuration over a shared dataset. The original-signal
/// columns are computed once from the first configuration's metric settings.
inline std::vector<ComparisonRow> compare_methods(const std::vector<PipelineConfig>& cfgs) {
    require(!cfgs.empty(), ErrorKind::InvalidArgument, "compare needs at least one configuration");
    for (const auto& c : cfgs) {
        run_stage("config", [&] { c.validate(); });
        require(dataset_json(c) == dataset_json(cfgs.front()), ErrorKind::InvalidArgument,
                "configurations describe different datasets");
    }
    const Dataset data = load_dataset(cfgs.front());
    PipelineConfig orig_cfg = cfgs.front();
    orig_cfg.metrics = {false, true, true, true};
    const OriginalMetrics orig = original_metrics(orig_cfg, data);

    std::vector<ComparisonRow> rows;
    for (const auto& c : cfgs) {
        PipelineConfig rc = c;
        rc.metrics = {false, true, true, true};
        const ResidualMetrics res = residual_metrics(rc, data, apply_method(rc, data));
        rows.push_back({to_string(c.method), orig.cc, res.cc, orig.delta_bar, res.delta_bar, res.mp});
    }
    return rows;
}

inline PipelineResult comparison_report(const std::vector<PipelineConfig>& cfgs, const std::vector<ComparisonRow>& rows) {
    using pipeline_detail::format_value;
    using pipeline_detail::optional_json;
    PipelineResult result;
    nlohmann::json& r = result.report;
    r["version"] = kVersion;
    r["configs"] = nlohmann::json::array();
    for (const auto& c : cfgs) {
        r["configs"].push_back(config_json(c));
    }
    r["rows"] = nlohmann::json::array();
    std::ostringstream csv;
    csv << "method,original_cc,residual_cc,original_delta_bar,residual_delta_bar,mp\n";
    for (const auto& row : rows) {
        const nlohmann::json j = {{"method", row.method},
                                  {"original_cc", optional_json(row.original_cc)},
                                  {"residual_cc", optional_json(row.residual_cc)},
                                  {"original_delta_bar", optional_json(row.original_delta_bar)},
                                  {"residual_delta_bar", optional_json(row.residual_delta_bar)},
                                  {"mp", optional_json(row.mp)}};
        r["rows"].push_back(j);
        csv << row.method << ',' << format_value(j["original_cc"]) << ',' << format_value(j["residual_cc"]) << ','
            << format_value(j["original_delta_bar"]) << ',' << format_value(j["residual_delta_bar"]) << ','
            << format_value(j["mp"]) << '\n';
    }
    result.csv = csv.str();
    return result;
}

} // namespace csid

#endif
