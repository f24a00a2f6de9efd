#pragma once

#include <json.hpp>

#include "pod2g/core/io.hpp"
#include "pod2g/core/rng.hpp"
#include "pod2g/pod.hpp"
#include "pod2g/problems.hpp"

namespace pod2g {

// ---------------------------------------------------------------------------
// Feedforward network
// ---------------------------------------------------------------------------

enum class Activation { Tanh, Relu };

/// Dense feedforward network, hidden activations only (identity output).
struct Mlp {
    std::vector<index_t> widths;  // input, hidden..., output
    Activation activation = Activation::Tanh;
    std::vector<DenseMatrix> weights;  // weights[l]: widths[l+1] x widths[l]
    std::vector<Vector> biases;

    static Mlp create(std::vector<index_t> widths, Activation act, Rng& rng) {
        require(widths.size() >= 2, "Mlp: at least input and output layers required");
        Mlp net;
        net.widths = std::move(widths);
        net.activation = act;
        for (index_t l = 0; l + 1 < net.widths.size(); ++l) {
            const index_t fan_in = net.widths[l], fan_out = net.widths[l + 1];
            const double s = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
            DenseMatrix W(fan_out, fan_in);
            for (double& w : W.data) w = s * rng.normal();
            net.weights.push_back(std::move(W));
            net.biases.emplace_back(fan_out, 0.0);
        }
        return net;
    }

    index_t n_layers() const { return weights.size(); }
    index_t input_dim() const { return widths.front(); }
    index_t output_dim() const { return widths.back(); }

    index_t parameter_count() const {
        index_t n = 0;
        for (index_t l = 0; l < n_layers(); ++l) n += weights[l].data.size() + biases[l].size();
        return n;
    }

    static double act_value(Activation a, double z) {
        return a == Activation::Tanh ? std::tanh(z) : std::max(z, 0.0);
    }
    static double act_grad(Activation a, double z) {
        if (a == Activation::Tanh) {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        return z > 0.0 ? 1.0 : 0.0;
    }

    Vector forward(const Vector& x) const {
        require(x.size() == input_dim(), "Mlp::forward: input dimension mismatch");
        Vector a = x;
        for (index_t l = 0; l < n_layers(); ++l) {
            Vector z = biases[l];
            for (index_t i = 0; i < weights[l].nrows; ++i)
                for (index_t j = 0; j < weights[l].ncols; ++j) z[i] += weights[l](i, j) * a[j];
            if (l + 1 < n_layers())
                for (double& v : z) v = act_value(activation, v);
            a = std::move(z);
        }
        return a;
    }
};

/// Per-layer gradient accumulator matching the network shape.
struct MlpGradients {
    std::vector<DenseMatrix> weights;
    std::vector<Vector> biases;

    explicit MlpGradients(const Mlp& net) {
        for (index_t l = 0; l < net.n_layers(); ++l) {
            weights.emplace_back(net.weights[l].nrows, net.weights[l].ncols);
            biases.emplace_back(net.biases[l].size(), 0.0);
        }
    }
    void clear() {
        for (auto& W : weights) W.data.assign(W.data.size(), 0.0);
        for (auto& b : biases) b.assign(b.size(), 0.0);
    }
};

/// Reverse-mode accumulation of d(||y - t||^2)/d(params) for one sample,
/// scaled by `weight`. Returns the sample's squared error ||y - t||^2.
inline double mlp_backprop(const Mlp& net, const Vector& x, const Vector& target, double weight,
                           MlpGradients& grads) {
    const index_t L = net.n_layers();
    std::vector<Vector> pre(L);         // pre-activation per layer
    std::vector<Vector> post(L + 1);    // post-activation, post[0] = input
    post[0] = x;
    for (index_t l = 0; l < L; ++l) {
        Vector z = net.biases[l];
        for (index_t i = 0; i < net.weights[l].nrows; ++i)
            for (index_t j = 0; j < net.weights[l].ncols; ++j)
                z[i] += net.weights[l](i, j) * post[l][j];
        pre[l] = z;
        if (l + 1 < L)
            for (double& v : z) v = Mlp::act_value(net.activation, v);
        post[l + 1] = std::move(z);
    }

    Vector delta(net.output_dim());
    double sq_err = 0.0;
    for (index_t i = 0; i < delta.size(); ++i) {
        const double diff = post[L][i] - target[i];
        delta[i] = 2.0 * diff;
        sq_err += diff * diff;
    }

    for (index_t li = L; li-- > 0;) {
        for (index_t i = 0; i < net.weights[li].nrows; ++i) {
            grads.biases[li][i] += weight * delta[i];
            for (index_t j = 0; j < net.weights[li].ncols; ++j)
                grads.weights[li](i, j) += weight * delta[i] * post[li][j];
        }
        if (li == 0) break;
        Vector prev(net.widths[li], 0.0);
        for (index_t j = 0; j < net.widths[li]; ++j) {
            double s = 0.0;
            for (index_t i = 0; i < net.weights[li].nrows; ++i)
                s += net.weights[li](i, j) * delta[i];
            prev[j] = s * Mlp::act_grad(net.activation, pre[li - 1][j]);
        }
        delta = std::move(prev);
    }
    return sq_err;
}

// ---------------------------------------------------------------------------
// Surrogate model
// ---------------------------------------------------------------------------

struct AffineNormalizer {
    Vector mean;
    Vector std;

    Vector normalize(const Vector& x) const {
        Vector out(x.size());
        for (index_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
        return out;
    }
    Vector denormalize(const Vector& x) const {
        Vector out(x.size());
        for (index_t i = 0; i < x.size(); ++i) out[i] = x[i] * std[i] + mean[i];
        return out;
    }

    static AffineNormalizer fit(const std::vector<Vector>& data,
                                const std::vector<index_t>& subset) {
        require(!subset.empty(), "AffineNormalizer: empty fit subset");
        const index_t dim = data.front().size();
        AffineNormalizer n;
        n.mean.assign(dim, 0.0);
        n.std.assign(dim, 0.0);
        for (index_t idx : subset)
            for (index_t j = 0; j < dim; ++j) n.mean[j] += data[idx][j];
        for (index_t j = 0; j < dim; ++j) n.mean[j] /= static_cast<double>(subset.size());
        for (index_t idx : subset)
            for (index_t j = 0; j < dim; ++j) {
                const double c = data[idx][j] - n.mean[j];
                n.std[j] += c * c;
            }
        for (index_t j = 0; j < dim; ++j) {
            n.std[j] = std::sqrt(n.std[j] / static_cast<double>(subset.size()));
            if (n.std[j] < 1e-300) n.std[j] = 1.0;  // constant feature
        }
        return n;
    }
};

struct TrainConfig {
    index_t epochs = 3000;
    index_t batch_size = 20;
    double learning_rate = 1e-4;
    double validation_split = 0.3;
    std::uint64_t seed = 0;
    std::vector<index_t> hidden = {32, 32};
    Activation activation = Activation::Tanh;
};

struct SurrogateModel {
    PodBasis basis;  // linear encoder/decoder
    Mlp mlp;
    AffineNormalizer input_norm;
    AffineNormalizer latent_norm;
    double best_validation_loss = 0.0;
    index_t best_epoch = 0;
};

/// z = Phi^T u
inline Vector encode(const Vector& u, const PodBasis& basis) { return basis.project(u); }

inline Vector decode(const Vector& z, const PodBasis& basis) { return basis.lift(z); }

/// ||u_pred - u_ref|| / ||u_ref||
inline double normalized_l2_error(const Vector& u_pred, const Vector& u_ref) {
    require(u_pred.size() == u_ref.size(), "normalized_l2_error: dimension mismatch");
    const double refnorm = norm2(u_ref);
    require(refnorm > 0.0, "normalized_l2_error: zero reference vector");
    Vector diff = u_pred;
    axpy(-1.0, u_ref, diff);
    return norm2(diff) / refnorm;
}

namespace detail {

struct AdamState {
    std::vector<DenseMatrix> mW, vW;
    std::vector<Vector> mB, vB;
    index_t step = 0;

    explicit AdamState(const Mlp& net) {
        for (index_t l = 0; l < net.n_layers(); ++l) {
            mW.emplace_back(net.weights[l].nrows, net.weights[l].ncols);
            vW.emplace_back(net.weights[l].nrows, net.weights[l].ncols);
            mB.emplace_back(net.biases[l].size(), 0.0);
            vB.emplace_back(net.biases[l].size(), 0.0);
        }
    }

    void update(Mlp& net, const MlpGradients& grads, double lr) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        ++step;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (index_t l = 0; l < net.n_layers(); ++l) {
            for (index_t k = 0; k < net.weights[l].data.size(); ++k) {
                const double g = grads.weights[l].data[k];
                double& m = mW[l].data[k];
                double& v = vW[l].data[k];
                m = beta1 * m + (1.0 - beta1) * g;
                v = beta2 * v + (1.0 - beta2) * g * g;
                net.weights[l].data[k] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
            }
            for (index_t k = 0; k < net.biases[l].size(); ++k) {
                const double g = grads.biases[l][k];
                double& m = mB[l][k];
                double& v = vB[l][k];
                m = beta1 * m + (1.0 - beta1) * g;
                v = beta2 * v + (1.0 - beta2) * g * g;
                net.biases[l][k] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
            }
        }
    }
};

}  // namespace detail

/// Train the parameter-to-latent network on encoded snapshots by mini-batch
/// Adam over the mean squared latent error, with a held-out validation split.
/// The parameters of the best validation epoch are returned.
inline SurrogateModel train_mlp(const SnapshotSet& snapshots, const PodBasis& basis,
                                const TrainConfig& config) {
    require(snapshots.size() >= 20, "train_mlp: at least 20 snapshots required");
    require(config.validation_split > 0.0 && config.validation_split < 1.0,
            "train_mlp: validation split outside (0,1)");
    require(config.learning_rate > 0.0, "train_mlp: learning rate must be positive");
    require(config.batch_size >= 1, "train_mlp: batch size must be positive");

    const index_t N = snapshots.size();
    const index_t n_in = snapshots.params.front().size();
    const index_t latent = basis.rank;

    std::vector<Vector> latents;
    latents.reserve(N);
    for (const Vector& u : snapshots.solutions) latents.push_back(basis.project(u));

    Rng rng(config.seed);
    std::vector<index_t> order(N);
    for (index_t i = 0; i < N; ++i) order[i] = i;
    rng.shuffle(order);
    const index_t n_val = std::max<index_t>(1, static_cast<index_t>(
                                                   std::llround(config.validation_split *
                                                                static_cast<double>(N))));
    require(n_val < N, "train_mlp: validation split leaves no training data");
    std::vector<index_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<index_t> train_idx(order.begin() + n_val, order.end());

    SurrogateModel model;
    model.basis = basis;
    model.input_norm = AffineNormalizer::fit(snapshots.params, train_idx);
    model.latent_norm = AffineNormalizer::fit(latents, train_idx);

    std::vector<Vector> x(N), t(N);
    for (index_t i = 0; i < N; ++i) {
        x[i] = model.input_norm.normalize(snapshots.params[i]);
        t[i] = model.latent_norm.normalize(latents[i]);
    }

    std::vector<index_t> arch{n_in};
    for (index_t hwidth : config.hidden) arch.push_back(hwidth);
    arch.push_back(latent);
    Mlp net = Mlp::create(arch, config.activation, rng);
    detail::AdamState adam(net);
    MlpGradients grads(net);

    auto validation_loss = [&]() {
        double loss = 0.0;
        for (index_t idx : val_idx) {
            const Vector y = net.forward(x[idx]);
            for (index_t j = 0; j < latent; ++j) {
                const double diff = y[j] - t[idx][j];
                loss += diff * diff;
            }
        }
        return loss / static_cast<double>(val_idx.size());
    };

    Mlp best = net;
    double best_loss = validation_loss();
    index_t best_epoch = 0;

    std::vector<index_t> epoch_order = train_idx;
    for (index_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(epoch_order);
        for (index_t start = 0; start < epoch_order.size(); start += config.batch_size) {
            const index_t end = std::min<index_t>(start + config.batch_size, epoch_order.size());
            grads.clear();
            const double w = 1.0 / static_cast<double>(end - start);
            double batch_loss = 0.0;
            for (index_t b = start; b < end; ++b)
                batch_loss += mlp_backprop(net, x[epoch_order[b]], t[epoch_order[b]], w, grads);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error(
                    "train_mlp: loss diverged to NaN/inf; try a smaller learning rate");
            adam.update(net, grads, config.learning_rate);
        }
        const double vloss = validation_loss();
        if (vloss < best_loss) {
            best_loss = vloss;
            best = net;
            best_epoch = epoch;
        }
    }

    model.mlp = std::move(best);
    model.best_validation_loss = best_loss;
    model.best_epoch = best_epoch;
    return model;
}

/// u_sur = Phi * denormalize(mlp(normalize(theta)))
inline Vector predict(const SurrogateModel& model, const Vector& theta) {
    const Vector z = model.mlp.forward(model.input_norm.normalize(theta));
    return model.basis.lift(model.latent_norm.denormalize(z));
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline void save_surrogate_model(const std::filesystem::path& dir, const SurrogateModel& model) {
    std::filesystem::create_directories(dir);
    save_pod_basis(dir / "basis", model.basis);

    std::string payload;
    for (const auto& W : model.mlp.weights)
        for (double v : W.data) append_f64le(payload, v);
    for (const auto& b : model.mlp.biases)
        for (double v : b) append_f64le(payload, v);
    std::ofstream bin(dir / "weights.bin", std::ios::binary);
    require(bin.good(), "save_surrogate_model: cannot write weights");
    bin.write(payload.data(), static_cast<std::streamsize>(payload.size()));

    nlohmann::json js{{"kind", "surrogate_model"},
                      {"widths", model.mlp.widths},
                      {"activation", model.mlp.activation == Activation::Tanh ? "tanh" : "relu"},
                      {"input_mean", model.input_norm.mean},
                      {"input_std", model.input_norm.std},
                      {"latent_mean", model.latent_norm.mean},
                      {"latent_std", model.latent_norm.std},
                      {"best_validation_loss", model.best_validation_loss},
                      {"best_epoch", model.best_epoch},
                      {"weights_fnv1a", fnv1a_hash(payload)}};
    write_text_file(dir / "model.json", js.dump(2) + "\n");
}

inline SurrogateModel load_surrogate_model(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "model.json");
    require(ms.good(), "load_surrogate_model: cannot open model.json in " + dir.string());
    nlohmann::json js = nlohmann::json::parse(ms);
    require(js.value("kind", "") == "surrogate_model", "load_surrogate_model: wrong artifact");

    SurrogateModel model;
    model.basis = load_pod_basis(dir / "basis");
    model.mlp.widths = js.at("widths").get<std::vector<index_t>>();
    model.mlp.activation = js.at("activation") == "tanh" ? Activation::Tanh : Activation::Relu;
    model.input_norm.mean = js.at("input_mean").get<Vector>();
    model.input_norm.std = js.at("input_std").get<Vector>();
    model.latent_norm.mean = js.at("latent_mean").get<Vector>();
    model.latent_norm.std = js.at("latent_std").get<Vector>();
    model.best_validation_loss = js.value("best_validation_loss", 0.0);
    model.best_epoch = js.value("best_epoch", index_t{0});

    std::ifstream bin(dir / "weights.bin", std::ios::binary);
    require(bin.good(), "load_surrogate_model: cannot open weights.bin");
    std::string payload((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    require(fnv1a_hash(payload) == js.at("weights_fnv1a").get<std::uint64_t>(),
            "load_surrogate_model: weight payload hash mismatch");

    const char* p = payload.data();
    const char* pend = payload.data() + payload.size();
    for (index_t l = 0; l + 1 < model.mlp.widths.size(); ++l) {
        DenseMatrix W(model.mlp.widths[l + 1], model.mlp.widths[l]);
        for (double& v : W.data) {
            require(p + 8 <= pend, "load_surrogate_model: truncated weights");
            v = read_f64le(p);
            p += 8;
        }
        model.mlp.weights.push_back(std::move(W));
        Vector b(model.mlp.widths[l + 1]);
        model.mlp.biases.push_back(std::move(b));
    }
    for (auto& b : model.mlp.biases)
        for (double& v : b) {
            require(p + 8 <= pend, "load_surrogate_model: truncated weights");
            v = read_f64le(p);
            p += 8;
        }
    require(p == pend, "load_surrogate_model: trailing bytes in weights");
    return model;
}

}  // namespace pod2g
