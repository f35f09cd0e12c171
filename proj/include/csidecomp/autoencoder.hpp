#ifndef CSIDECOMP_AUTOENCODER_HPP
#define CSIDECOMP_AUTOENCODER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csidecomp/csi.hpp"
#include "csidecomp/csi_io.hpp"
#include "csidecomp/parallel.hpp"
#include "csidecomp/rng.hpp"

namespace csid {

enum class Activation : std::uint8_t { Linear = 0, Tanh = 1, Softplus = 2, Relu = 3 };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Tanh: return "tanh";
        case Activation::Softplus: return "softplus";
        case Activation::Relu: return "relu";
    }
    return "unknown";
}

/// Layer widths dims[0..L] and the activation applied after each of the L
/// dense layers. `bottleneck` is the 0-based layer whose output is the code.
struct MlpSpec {
    std::vector<std::size_t> dims;
    std::vector<Activation> activations;
    std::size_t bottleneck = 0;

    std::size_t layers() const { return activations.size(); }
    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }

    void validate() const {
        require(dims.size() >= 2 && dims.size() == activations.size() + 1, ErrorKind::InvalidArgument,
                "need one activation per dense layer");
        require(std::all_of(dims.begin(), dims.end(), [](std::size_t d) { return d >= 1; }), ErrorKind::InvalidArgument,
                "layer widths must be positive");
        require(dims.front() == dims.back(), ErrorKind::InvalidArgument, "autoencoder input and output widths differ");
        require(bottleneck < layers(), ErrorKind::InvalidArgument, "bottleneck layer out of range");
        const std::size_t centre = bottleneck + 1;
        for (std::size_t i = 1; i <= std::min(centre, dims.size() - 1 - centre); ++i) {
            require(dims[centre - i] == dims[centre + i], ErrorKind::InvalidArgument,
                    "encoder and decoder widths must mirror around the bottleneck");
        }
    }

    /// input - 100 tanh - 50 softplus - 20 tanh - d_hat linear - 20 relu - 50 softplus - 100 tanh - input linear
    static MlpSpec table_iv(std::size_t input_dim, std::size_t d_hat) {
        require(d_hat >= 1, ErrorKind::InvalidArgument, "bottleneck width must be >= 1");
        MlpSpec s;
        s.dims = {input_dim, 100, 50, 20, d_hat, 20, 50, 100, input_dim};
        s.activations = {Activation::Tanh,   Activation::Softplus, Activation::Tanh,     Activation::Linear,
                         Activation::Relu,   Activation::Softplus, Activation::Tanh,     Activation::Linear};
        s.bottleneck = 3;
        s.validate();
        return s;
    }
};

struct DenseLayer {
    Eigen::MatrixXd w; // out x in
    Eigen::VectorXd b;
};

struct MlpWeights {
    std::vector<DenseLayer> layers;

    std::size_t parameter_count() const {
        std::size_t total = 0;
        for (const auto& l : layers) {
            total += static_cast<std::size_t>(l.w.size() + l.b.size());
        }
        return total;
    }

    /// Flat parameter addressing: per layer, W in column-major order then b.
    double& parameter(std::size_t index) {
        for (auto& l : layers) {
            const auto wn = static_cast<std::size_t>(l.w.size());
            if (index < wn) {
                return l.w.data()[index];
            }
            index -= wn;
            const auto bn = static_cast<std::size_t>(l.b.size());
            if (index < bn) {
                return l.b.data()[index];
            }
            index -= bn;
        }
        throw Error(ErrorKind::InvalidArgument, "parameter index out of range");
    }

    double parameter(std::size_t index) const { return const_cast<MlpWeights*>(this)->parameter(index); }

    friend bool operator==(const MlpWeights& a, const MlpWeights& b) {
        if (a.layers.size() != b.layers.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.layers.size(); ++i) {
            const auto& x = a.layers[i];
            const auto& y = b.layers[i];
            if (x.w.rows() != y.w.rows() || x.w.cols() != y.w.cols() || x.w != y.w || x.b != y.b) {
                return false;
            }
        }
        return true;
    }
};

/// Uniform(-sqrt(3/fan_in), sqrt(3/fan_in)) weights, zero biases.
inline MlpWeights init_weights(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng = make_rng(seed, 0x41455731u);
    MlpWeights w;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const auto in = static_cast<Eigen::Index>(spec.dims[l]);
        const auto out = static_cast<Eigen::Index>(spec.dims[l + 1]);
        const double limit = std::sqrt(3.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> uni(-limit, limit);
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
        for (Eigen::Index j = 0; j < in; ++j) {
            for (Eigen::Index i = 0; i < out; ++i) {
                layer.w(i, j) = uni(rng);
            }
        }
        w.layers.push_back(std::move(layer));
    }
    return w;
}

inline MlpWeights zero_like(const MlpWeights& w) {
    MlpWeights z;
    for (const auto& l : w.layers) {
        z.layers.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()), Eigen::VectorXd::Zero(l.b.size())});
    }
    return z;
}

namespace ae_detail {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline Eigen::MatrixXd apply(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
        case Activation::Linear: return z;
        case Activation::Tanh: return z.array().tanh().matrix();
        case Activation::Softplus: return z.unaryExpr([](double v) { return softplus(v); });
        case Activation::Relu: return z.cwiseMax(0.0);
    }
    return z;
}

/// Derivative of the activation evaluated at pre-activation z (with post-activation a).
inline Eigen::MatrixXd derivative(Activation act, const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) {
    switch (act) {
        case Activation::Linear: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
        case Activation::Tanh: return (1.0 - a.array().square()).matrix();
        case Activation::Softplus: return z.unaryExpr([](double v) { return sigmoid(v); });
        case Activation::Relu: return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

} // namespace ae_detail

/// Cached forward pass over a batch (one sample per column).
struct ForwardPass {
    std::vector<Eigen::MatrixXd> pre;  // z_l, l = 1..L
    std::vector<Eigen::MatrixXd> post; // a_0 = x, a_l = act(z_l)
    std::size_t bottleneck = 0;

    const Eigen::MatrixXd& output() const { return post.back(); }
    const Eigen::MatrixXd& code() const { return post[bottleneck + 1]; }
};

inline ForwardPass forward(const MlpSpec& spec, const MlpWeights& weights, const Eigen::MatrixXd& x) {
    require(weights.layers.size() == spec.layers(), ErrorKind::ShapeMismatch, "weights do not match the layer spec");
    require(static_cast<std::size_t>(x.rows()) == spec.input_dim(), ErrorKind::ShapeMismatch,
            "input has " + std::to_string(x.rows()) + " rows, network expects " + std::to_string(spec.input_dim()));
    ForwardPass pass;
    pass.bottleneck = spec.bottleneck;
    pass.post.push_back(x);
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const auto& layer = weights.layers[l];
        Eigen::MatrixXd z = layer.w * pass.post.back();
        z.colwise() += layer.b;
        pass.post.push_back(ae_detail::apply(spec.activations[l], z));
        pass.pre.push_back(std::move(z));
    }
    return pass;
}

/// Reverse-mode gradient of a loss given dL/d(output) for the batch.
inline MlpWeights backward(const MlpSpec& spec, const MlpWeights& weights, const ForwardPass& pass,
                           const Eigen::MatrixXd& d_output) {
    MlpWeights grad = zero_like(weights);
    Eigen::MatrixXd delta = d_output;
    for (std::size_t l = spec.layers(); l-- > 0;) {
        delta.array() *= ae_detail::derivative(spec.activations[l], pass.pre[l], pass.post[l + 1]).array();
        grad.layers[l].w.noalias() = delta * pass.post[l].transpose();
        grad.layers[l].b = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd next = weights.layers[l].w.transpose() * delta;
            delta = std::move(next);
        }
    }
    return grad;
}

enum class LossKind : std::uint8_t { E1Mse = 0, E2DotProduct = 1 };

/// E1 alone, or E2 on pair samples [h_n; h_m] plus mu * E1.
struct LossSpec {
    LossKind kind = LossKind::E1Mse;
    double mu = 1.0;
};

/// (1/B) sum_b |x_b - y_b|^2
inline double loss_e1(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    require(x.rows() == y.rows() && x.cols() == y.cols() && x.cols() >= 1, ErrorKind::ShapeMismatch,
            "input and reconstruction differ in shape");
    return (x - y).squaredNorm() / static_cast<double>(x.cols());
}

/// (1/N) sum_n sum_{m in U(n)} r_n . r_m over per-node residual columns.
inline double loss_e2(const Eigen::MatrixXd& residuals, const NeighborTable& neighbors) {
    const auto n = static_cast<std::size_t>(residuals.cols());
    require(neighbors.size() == n, ErrorKind::InvalidArgument, "E2 needs one neighbour set per node");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : neighbors[i]) {
            require(j < n, ErrorKind::InvalidArgument, "neighbour index out of range");
            total += residuals.col(static_cast<Eigen::Index>(i)).dot(residuals.col(static_cast<Eigen::Index>(j)));
        }
    }
    return total / static_cast<double>(n);
}

/// E2 for pair samples: each column is [h_n; h_m] and contributes r_n . r_m.
inline double loss_e2_pairs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    require(x.rows() == y.rows() && x.cols() == y.cols() && x.rows() % 2 == 0, ErrorKind::ShapeMismatch,
            "pair samples need an even feature count");
    const Eigen::Index half = x.rows() / 2;
    const Eigen::MatrixXd r = x - y;
    return (r.topRows(half).array() * r.bottomRows(half).array()).sum() / static_cast<double>(x.cols());
}

inline double loss_value(const LossSpec& loss, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (loss.kind == LossKind::E1Mse) {
        return loss_e1(x, y);
    }
    return loss_e2_pairs(x, y) + loss.mu * loss_e1(x, y);
}

/// dL/dy for a batch.
inline Eigen::MatrixXd loss_output_gradient(const LossSpec& loss, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const double inv_b = 1.0 / static_cast<double>(x.cols());
    const Eigen::MatrixXd r = x - y;
    Eigen::MatrixXd g = -2.0 * inv_b * r;
    if (loss.kind == LossKind::E1Mse) {
        return g;
    }
    g *= loss.mu;
    const Eigen::Index half = x.rows() / 2;
    g.topRows(half) -= inv_b * r.bottomRows(half);
    g.bottomRows(half) -= inv_b * r.topRows(half);
    return g;
}

struct LossAndGradient {
    double loss = 0.0;
    MlpWeights gradient;
};

inline LossAndGradient loss_and_gradient(const MlpSpec& spec, const MlpWeights& weights, const Eigen::MatrixXd& x,
                                         const LossSpec& loss) {
    const ForwardPass pass = forward(spec, weights, x);
    return {loss_value(loss, x, pass.output()), backward(spec, weights, pass, loss_output_gradient(loss, x, pass.output()))};
}

enum class TrainingMode : std::uint8_t { Localized = 0, Centralized = 1 };

struct TrainConfig {
    LossSpec loss;
    double step = 1e-3;
    std::size_t batch = 32;
    std::size_t epochs = 200;
    std::uint64_t seed = 1;
    TrainingMode mode = TrainingMode::Centralized;
    std::size_t k_neighbors = 8;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        require(step > 0.0 && std::isfinite(step), ErrorKind::InvalidArgument, "step size must be positive");
        require(epochs >= 1, ErrorKind::InvalidArgument, "need at least one epoch");
        require(batch >= 1, ErrorKind::InvalidArgument, "batch size must be >= 1");
        require(loss.mu >= 0.0 && std::isfinite(loss.mu), ErrorKind::InvalidArgument, "mu must be >= 0");
        require(loss.kind == LossKind::E1Mse || k_neighbors >= 1, ErrorKind::InvalidArgument,
                "E2 training needs at least one neighbour");
    }
};

/// Adam optimiser state.
class Adam {
public:
    Adam(const MlpWeights& shape, const TrainConfig& cfg) : m_(zero_like(shape)), v_(zero_like(shape)), cfg_(cfg) {}

    void step(MlpWeights& weights, const MlpWeights& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t l = 0; l < weights.layers.size(); ++l) {
            update(weights.layers[l].w, grad.layers[l].w, m_.layers[l].w, v_.layers[l].w, c1, c2);
            update(weights.layers[l].b, grad.layers[l].b, m_.layers[l].b, v_.layers[l].b, c1, c2);
        }
    }

private:
    template <class P, class G>
    void update(P& p, const G& g, P& m, P& v, double c1, double c2) const {
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        p.array() -= cfg_.step * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.epsilon);
    }

    MlpWeights m_;
    MlpWeights v_;
    TrainConfig cfg_;
    std::uint64_t t_ = 0;
};

/// Trained network plus the metadata needed to apply it. AE2 networks take
/// [h_n; h_m] pair inputs and need the neighbour table at decomposition time.
struct AeModel {
    MlpSpec spec;
    MlpWeights weights;
    LossSpec loss;
    std::size_t k_neighbors = 8;

    bool pair_input() const { return loss.kind == LossKind::E2DotProduct; }
};

struct TrainResult {
    AeModel model;
    std::vector<double> epoch_loss; // mean batch loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Stacks [x_n; x_m] for the given (n, m) pairs.
inline Eigen::MatrixXd pair_samples(const Eigen::MatrixXd& nodes, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    const Eigen::Index f = nodes.rows();
    Eigen::MatrixXd out(2 * f, static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t s = 0; s < pairs.size(); ++s) {
        out.col(static_cast<Eigen::Index>(s)) << nodes.col(static_cast<Eigen::Index>(pairs[s].first)),
            nodes.col(static_cast<Eigen::Index>(pairs[s].second));
    }
    return out;
}

/// Mini-batch Adam training on the node columns of `data`. AE1 uses each node
/// once per epoch. AE2 pairs every node with one neighbour drawn uniformly from
/// its k nearest each epoch. Deterministic for a fixed seed.
inline TrainResult train(const RealView& data, std::size_t d_hat, const TrainConfig& cfg,
                         const NeighborTable* neighbors = nullptr, const EpochCallback& on_epoch = {}) {
    cfg.validate();
    const bool pairs = cfg.loss.kind == LossKind::E2DotProduct;
    const std::size_t n = data.n();
    if (pairs) {
        require(neighbors != nullptr && neighbors->size() == n, ErrorKind::InvalidArgument,
                "E2 training needs a neighbour table covering every node");
        for (const auto& u : *neighbors) {
            require(!u.empty(), ErrorKind::InvalidArgument, "E2 training needs non-empty neighbour sets");
        }
    }
    const std::size_t input_dim = pairs ? 2 * data.features() : data.features();

    TrainResult result;
    result.model.spec = MlpSpec::table_iv(input_dim, d_hat);
    result.model.weights = init_weights(result.model.spec, cfg.seed);
    result.model.loss = cfg.loss;
    result.model.k_neighbors = pairs ? neighbors->front().size() : cfg.k_neighbors;
    const MlpSpec& spec = result.model.spec;
    MlpWeights& weights = result.model.weights;

    Adam adam(weights, cfg);
    Rng rng = make_rng(cfg.seed, 0x54524149u);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Eigen::MatrixXd samples = data.data();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (pairs) {
            std::vector<std::pair<std::size_t, std::size_t>> chosen(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& u = (*neighbors)[i];
                std::uniform_int_distribution<std::size_t> pick(0, u.size() - 1);
                chosen[i] = {i, u[pick(rng)]};
            }
            samples = pair_samples(data.data(), chosen);
        }
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch) {
            const std::size_t count = std::min(cfg.batch, n - start);
            Eigen::MatrixXd batch(static_cast<Eigen::Index>(input_dim), static_cast<Eigen::Index>(count));
            for (std::size_t b = 0; b < count; ++b) {
                batch.col(static_cast<Eigen::Index>(b)) = samples.col(static_cast<Eigen::Index>(order[start + b]));
            }
            const LossAndGradient lg = loss_and_gradient(spec, weights, batch, cfg.loss);
            require(std::isfinite(lg.loss), ErrorKind::NonFinite,
                    "training loss became non-finite at epoch " + std::to_string(epoch + 1) + ", batch " +
                        std::to_string(batches + 1));
            adam.step(weights, lg.gradient);
            epoch_total += lg.loss;
            ++batches;
        }
        const double mean_loss = epoch_total / static_cast<double>(batches);
        result.epoch_loss.push_back(mean_loss);
        if (on_epoch) {
            on_epoch(epoch + 1, mean_loss);
        }
    }
    return result;
}

struct AeDecomposition {
    Eigen::MatrixXd predictable;   // decoder output per node
    Eigen::MatrixXd unpredictable; // input - predictable
};

/// Decoder output and residual per node. Pair-input models average the first
/// half of the reconstruction of [h_n; h_m] over the k nearest neighbours m.
inline AeDecomposition decompose_ae(const AeModel& model, const RealView& data, const NeighborTable* neighbors = nullptr) {
    AeDecomposition out;
    if (!model.pair_input()) {
        out.predictable = forward(model.spec, model.weights, data.data()).output();
    } else {
        require(neighbors != nullptr && neighbors->size() == data.n(), ErrorKind::InvalidArgument,
                "pair-input model needs a neighbour table covering every node");
        const Eigen::Index f = static_cast<Eigen::Index>(data.features());
        out.predictable = Eigen::MatrixXd::Zero(f, static_cast<Eigen::Index>(data.n()));
        for (std::size_t i = 0; i < data.n(); ++i) {
            const auto& u = (*neighbors)[i];
            require(!u.empty(), ErrorKind::InvalidArgument, "empty neighbour set");
            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            for (std::size_t j : u) {
                pairs.emplace_back(i, j);
            }
            const Eigen::MatrixXd y = forward(model.spec, model.weights, pair_samples(data.data(), pairs)).output();
            out.predictable.col(static_cast<Eigen::Index>(i)) = y.topRows(f).rowwise().mean();
        }
    }
    out.unpredictable = data.data() - out.predictable;
    return out;
}

/// Bob-side and Alice-side models. Centralized training fits one network on
/// Bob's uplink observations and shares it; localized training fits one
/// network per side on that side's own observations.
struct AeSidePair {
    TrainResult bob;
    TrainResult alice;
};

inline AeSidePair train_sides(const RealView& uplink, const RealView& downlink, std::size_t d_hat, const TrainConfig& cfg,
                              const NeighborTable* neighbors = nullptr) {
    if (cfg.mode == TrainingMode::Centralized) {
        TrainResult bob = train(uplink, d_hat, cfg, neighbors);
        TrainResult alice = bob;
        return {std::move(bob), std::move(alice)};
    }
    std::vector<TrainResult> sides(2);
    parallel_for(2, [&](std::size_t side) {
        TrainConfig c = cfg;
        c.seed = derive_seed(cfg.seed, 0x5349444Cu, side);
        sides[side] = train(side == 0 ? uplink : downlink, d_hat, c, neighbors);
    });
    return {std::move(sides[0]), std::move(sides[1])};
}

// Weights file, little-endian:
//   "AEW1" | u32 version | u8 loss kind | f64 mu | u32 k_neighbors | u32 layers L
//   | u32 dims[L+1] | u8 activations[L] | u32 bottleneck | per layer: W row-major, b
inline constexpr std::uint32_t kAeWeightsVersion = 1;

inline std::vector<unsigned char> encode_ae_model(const AeModel& model) {
    using namespace io_detail;
    std::vector<unsigned char> out{'A', 'E', 'W', '1'};
    put_u32(out, kAeWeightsVersion);
    out.push_back(static_cast<unsigned char>(model.loss.kind));
    put_f64(out, model.loss.mu);
    put_u32(out, static_cast<std::uint32_t>(model.k_neighbors));
    put_u32(out, static_cast<std::uint32_t>(model.spec.layers()));
    for (std::size_t d : model.spec.dims) {
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (Activation a : model.spec.activations) {
        out.push_back(static_cast<unsigned char>(a));
    }
    put_u32(out, static_cast<std::uint32_t>(model.spec.bottleneck));
    for (const auto& l : model.weights.layers) {
        for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
            for (Eigen::Index j = 0; j < l.w.cols(); ++j) {
                put_f64(out, l.w(i, j));
            }
        }
        for (Eigen::Index i = 0; i < l.b.size(); ++i) {
            put_f64(out, l.b(i));
        }
    }
    return out;
}

inline AeModel decode_ae_model(const std::vector<unsigned char>& bytes) {
    using namespace io_detail;
    std::size_t pos = 0;
    auto need = [&](std::size_t count, ErrorKind kind) {
        require(bytes.size() - pos >= count, kind, "weights file ends early at byte " + std::to_string(pos));
    };
    need(4 + 4 + 1 + 8 + 4 + 4, ErrorKind::TruncatedHeader);
    require(bytes[0] == 'A' && bytes[1] == 'E' && bytes[2] == 'W' && bytes[3] == '1', ErrorKind::BadMagic,
            "expected 'AEW1' file signature");
    pos = 4;
    const std::uint32_t version = get_u32(&bytes[pos]);
    pos += 4;
    require(version == kAeWeightsVersion, ErrorKind::UnsupportedVersion, "weights version " + std::to_string(version));
    AeModel model;
    require(bytes[pos] <= 1, ErrorKind::Parse, "unknown loss kind");
    model.loss.kind = static_cast<LossKind>(bytes[pos++]);
    model.loss.mu = get_f64(&bytes[pos]);
    pos += 8;
    model.k_neighbors = get_u32(&bytes[pos]);
    pos += 4;
    const std::uint32_t layers = get_u32(&bytes[pos]);
    pos += 4;
    require(layers >= 1 && layers <= 1024, ErrorKind::DimensionOverflow, "implausible layer count");
    need(4 * (layers + 1) + layers + 4, ErrorKind::TruncatedHeader);
    for (std::uint32_t i = 0; i <= layers; ++i) {
        model.spec.dims.push_back(get_u32(&bytes[pos]));
        pos += 4;
    }
    for (std::uint32_t i = 0; i < layers; ++i) {
        require(bytes[pos] <= 3, ErrorKind::Parse, "unknown activation code");
        model.spec.activations.push_back(static_cast<Activation>(bytes[pos++]));
    }
    model.spec.bottleneck = get_u32(&bytes[pos]);
    pos += 4;
    model.spec.validate();
    for (std::uint32_t l = 0; l < layers; ++l) {
        const auto in = static_cast<Eigen::Index>(model.spec.dims[l]);
        const auto out = static_cast<Eigen::Index>(model.spec.dims[l + 1]);
        need(static_cast<std::size_t>(8 * (in * out + out)), ErrorKind::TruncatedPayload);
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
        for (Eigen::Index i = 0; i < out; ++i) {
            for (Eigen::Index j = 0; j < in; ++j) {
                layer.w(i, j) = get_f64(&bytes[pos]);
                pos += 8;
            }
        }
        for (Eigen::Index i = 0; i < out; ++i) {
            layer.b(i) = get_f64(&bytes[pos]);
            pos += 8;
        }
        model.weights.layers.push_back(std::move(layer));
    }
    return model;
}

inline void write_ae_model(const AeModel& model, const std::string& path) { io_detail::write_all(path, encode_ae_model(model)); }

inline AeModel read_ae_model(const std::string& path) { return decode_ae_model(io_detail::read_all(path)); }

} // namespace csid

#endif
