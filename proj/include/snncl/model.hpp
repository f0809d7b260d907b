#pragma once

#include <snncl/common.hpp>

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace snncl {

inline constexpr double kVth = 0.5;       // firing threshold, soft reset subtracts exactly this
inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

enum class NeuronKind { Plif, Relu };
enum class RunMode { Train, Eval };

// Step emits binary spikes (production path).  Smooth replaces the threshold
// with the arctangent sigmoid whose exact derivative is the surrogate, making
// the whole forward differentiable; gradient verification runs in this mode.
enum class SpikeFn { Step, Smooth };

// Arctangent surrogate: g(u) = a / (2 (1 + (pi/2 a u)^2)), peak g(0) = a/2.
template <class S>
S atan_surrogate(S u, S width) {
    const S t = S(M_PI_2) * width * u;
    return width / (S(2) * (S(1) + t * t));
}

// Smooth spike: primitive of the surrogate, maps R -> (0,1) with phi(0)=0.5.
template <class S>
S atan_spike(S u, S width) {
    return std::atan(S(M_PI_2) * width * u) / S(M_PI) + S(0.5);
}

template <class S>
struct TensorView {
    const char* name;
    S* data;
    Eigen::Index size;
};

template <class S>
struct LinearParams {
    Mat<S> w;  // in x out
    Vec<S> b;
};

template <class S>
struct BatchNormParams {
    Vec<S> gamma, beta;
    Vec<S> running_mean, running_var;
};

// All trainable tensors of the two-hidden-layer detector plus BN running
// stats.  The spiking variant adds one learnable time constant per hidden
// layer, stored unconstrained with tau = 1 + softplus(raw) so tau > 1.
template <class S>
struct ModelParams {
    NeuronKind kind = NeuronKind::Plif;
    int input_dim = 79;
    int hidden_dim = 128;
    int n_classes = 2;
    int t_steps = 20;    // timesteps fed per window
    int window_len = 50; // source window length

    LinearParams<S> fc1, fc2, fc3;
    BatchNormParams<S> bn1, bn2;
    S tau_raw1{}, tau_raw2{};

    static S tau_from_raw(S raw) {
        // softplus with overflow guard
        const S sp = raw > S(20) ? raw : std::log1p(std::exp(raw));
        return S(1) + sp;
    }
    static S dtau_draw(S raw) { return S(1) / (S(1) + std::exp(-raw)); }
    static S raw_from_tau(S tau) {
        // inverse of tau = 1 + log1p(exp(raw))
        const S sp = tau - S(1);
        return std::log(std::expm1(sp));
    }

    S tau1() const { return tau_from_raw(tau_raw1); }
    S tau2() const { return tau_from_raw(tau_raw2); }

    static ModelParams make(NeuronKind kind, int input_dim, int hidden_dim, int n_classes,
                            int t_steps, int window_len, std::uint64_t seed) {
        ModelParams p;
        p.kind = kind;
        p.input_dim = input_dim;
        p.hidden_dim = hidden_dim;
        p.n_classes = n_classes;
        p.t_steps = t_steps;
        p.window_len = window_len;

        std::mt19937_64 rng(derive_seed(seed, "model-init"));
        auto init_linear = [&](LinearParams<S>& lin, int in, int out) {
            const double bound = 1.0 / std::sqrt(double(in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            lin.w.resize(in, out);
            for (Eigen::Index i = 0; i < lin.w.size(); ++i) lin.w.data()[i] = S(dist(rng));
            lin.b = Vec<S>::Zero(out);
        };
        auto init_bn = [&](BatchNormParams<S>& bn, int n) {
            bn.gamma = Vec<S>::Ones(n);
            bn.beta = Vec<S>::Zero(n);
            bn.running_mean = Vec<S>::Zero(n);
            bn.running_var = Vec<S>::Ones(n);
        };
        init_linear(p.fc1, input_dim, hidden_dim);
        init_bn(p.bn1, hidden_dim);
        init_linear(p.fc2, hidden_dim, hidden_dim);
        init_bn(p.bn2, hidden_dim);
        init_linear(p.fc3, hidden_dim, n_classes);
        p.tau_raw1 = p.tau_raw2 = raw_from_tau(S(2));  // tau init 2.0
        return p;
    }

    // trainable tensors, canonical order (BN running stats excluded)
    std::vector<TensorView<S>> tensors() {
        std::vector<TensorView<S>> v = {
            {"fc1.w", fc1.w.data(), fc1.w.size()},     {"fc1.b", fc1.b.data(), fc1.b.size()},
            {"bn1.gamma", bn1.gamma.data(), bn1.gamma.size()},
            {"bn1.beta", bn1.beta.data(), bn1.beta.size()},
            {"fc2.w", fc2.w.data(), fc2.w.size()},     {"fc2.b", fc2.b.data(), fc2.b.size()},
            {"bn2.gamma", bn2.gamma.data(), bn2.gamma.size()},
            {"bn2.beta", bn2.beta.data(), bn2.beta.size()},
            {"fc3.w", fc3.w.data(), fc3.w.size()},     {"fc3.b", fc3.b.data(), fc3.b.size()},
        };
        if (kind == NeuronKind::Plif) {
            v.push_back({"tau_raw1", &tau_raw1, 1});
            v.push_back({"tau_raw2", &tau_raw2, 1});
        }
        return v;
    }

    // everything persisted in a checkpoint
    std::vector<TensorView<S>> state_tensors() {
        auto v = tensors();
        v.push_back({"bn1.running_mean", bn1.running_mean.data(), bn1.running_mean.size()});
        v.push_back({"bn1.running_var", bn1.running_var.data(), bn1.running_var.size()});
        v.push_back({"bn2.running_mean", bn2.running_mean.data(), bn2.running_mean.size()});
        v.push_back({"bn2.running_var", bn2.running_var.data(), bn2.running_var.size()});
        return v;
    }

    std::int64_t count_params() {
        std::int64_t n = 0;
        for (const auto& t : tensors()) n += t.size;
        return n;
    }

    template <class S2>
    ModelParams<S2> cast() const {
        ModelParams<S2> q;
        q.kind = kind;
        q.input_dim = input_dim;
        q.hidden_dim = hidden_dim;
        q.n_classes = n_classes;
        q.t_steps = t_steps;
        q.window_len = window_len;
        q.fc1 = {fc1.w.template cast<S2>(), fc1.b.template cast<S2>()};
        q.fc2 = {fc2.w.template cast<S2>(), fc2.b.template cast<S2>()};
        q.fc3 = {fc3.w.template cast<S2>(), fc3.b.template cast<S2>()};
        q.bn1 = {bn1.gamma.template cast<S2>(), bn1.beta.template cast<S2>(),
                 bn1.running_mean.template cast<S2>(), bn1.running_var.template cast<S2>()};
        q.bn2 = {bn2.gamma.template cast<S2>(), bn2.beta.template cast<S2>(),
                 bn2.running_mean.template cast<S2>(), bn2.running_var.template cast<S2>()};
        q.tau_raw1 = S2(tau_raw1);
        q.tau_raw2 = S2(tau_raw2);
        return q;
    }
};

// T strictly increasing indices: round(linspace(0, L-1, T)).
inline std::vector<int> subsample_timesteps(int window_len, int t_steps) {
    if (t_steps < 1 || t_steps > window_len)
        throw InputError("subsample_timesteps: need 1 <= T <= L, got T=" +
                         std::to_string(t_steps) + " L=" + std::to_string(window_len));
    std::vector<int> idx(static_cast<std::size_t>(t_steps));
    if (t_steps == 1) {
        idx[0] = 0;
        return idx;
    }
    for (int i = 0; i < t_steps; ++i)
        idx[static_cast<std::size_t>(i)] =
            static_cast<int>(std::llround(double(i) * double(window_len - 1) / double(t_steps - 1)));
    return idx;
}

// Single neuron-layer timestep: v <- (1 - 1/tau) v + (1/tau) I, strict
// threshold, soft reset by exactly v_th.
template <class S>
struct PlifState {
    Vec<S> v;
    S tau;
};

template <class S>
Vec<S> plif_step(PlifState<S>& state, const Vec<S>& input_current) {
    const S k = S(1) / state.tau;
    state.v = (S(1) - k) * state.v + k * input_current;
    Vec<S> spikes(state.v.size());
    for (Eigen::Index i = 0; i < state.v.size(); ++i) {
        const bool fire = state.v[i] > S(kVth);
        spikes[i] = fire ? S(1) : S(0);
        if (fire) state.v[i] -= S(kVth);
    }
    return spikes;
}

// MACs: every weight touched per timestep.  SOPs: spike-driven accumulates
// only, input events x fan-out.
struct OpCounter {
    double macs = 0.0;
    double sops = 0.0;
    double sops_fc1 = 0.0, sops_fc2 = 0.0, sops_fc3 = 0.0;
    std::int64_t inferences = 0;

    double macs_per_inference() const { return inferences ? macs / double(inferences) : 0.0; }
    double sops_per_inference() const { return inferences ? sops / double(inferences) : 0.0; }

    void merge(const OpCounter& o) {
        macs += o.macs;
        sops += o.sops;
        sops_fc1 += o.sops_fc1;
        sops_fc2 += o.sops_fc2;
        sops_fc3 += o.sops_fc3;
        inferences += o.inferences;
    }

    nlohmann::json to_json() const {
        return {{"macs", macs},
                {"sops", sops},
                {"sops_fc1", sops_fc1},
                {"sops_fc2", sops_fc2},
                {"sops_fc3", sops_fc3},
                {"inferences", inferences},
                {"macs_per_inference", macs_per_inference()},
                {"sops_per_inference", sops_per_inference()}};
    }
};

inline double ann_macs_per_inference(int input_dim, int hidden_dim, int n_classes, int t_steps) {
    return double(t_steps) *
           (double(input_dim) * hidden_dim + double(hidden_dim) * hidden_dim +
            double(hidden_dim) * n_classes);
}

template <class S>
struct BlockTrace {
    std::vector<Mat<S>> xhat;   // BN-normalized pre-activations, per timestep
    std::vector<Mat<S>> vpre;   // membrane before threshold (PLIF only)
    std::vector<Mat<S>> out;    // spikes (PLIF) or activations (ReLU)
    Vec<S> mean, var;           // stats used for normalization
};

// Everything the hand-derived backward pass consumes; sufficient to replay
// the forward bit-exactly.
template <class S>
struct ForwardTrace {
    std::vector<Mat<S>> input;
    BlockTrace<S> b1, b2;
    int batch = 0;
    int steps = 0;
    bool train_mode = false;
    NeuronKind kind = NeuronKind::Plif;
    SpikeFn spike_fn = SpikeFn::Step;
    S surrogate_width = S(2);
};

template <class S>
struct ForwardResult {
    Mat<S> logits;  // batch x n_classes, averaged over timesteps
    ForwardTrace<S> trace;
    OpCounter ops;
};

namespace detail {

template <class S>
std::int64_t nnz(const Mat<S>& m) {
    return (m.array() != S(0)).count();
}

}  // namespace detail

// Time-major forward: fc1 -> bn1 -> neuron -> fc2 -> bn2 -> neuron -> fc3,
// logits averaged over timesteps.  Membrane state starts at zero for every
// window.  Train mode normalizes with batch statistics pooled over
// (batch x time) and updates running stats; eval mode reads running stats
// and is a pure function of (params, input).
template <class S>
ForwardResult<S> forward(ModelParams<S>& params, const std::vector<Mat<S>>& input, RunMode mode,
                         SpikeFn spike_fn = SpikeFn::Step, S surrogate_width = S(2)) {
    const int steps = static_cast<int>(input.size());
    if (steps == 0) throw InputError("forward: empty input sequence");
    const auto batch = input[0].rows();
    const int h = params.hidden_dim;
    for (const auto& x : input)
        if (x.rows() != batch || x.cols() != params.input_dim)
            throw InputError("forward: input shape mismatch (expected batch x " +
                             std::to_string(params.input_dim) + ")");

    ForwardResult<S> res;
    auto& tr = res.trace;
    tr.batch = static_cast<int>(batch);
    tr.steps = steps;
    tr.train_mode = (mode == RunMode::Train);
    tr.kind = params.kind;
    tr.spike_fn = spike_fn;
    tr.surrogate_width = surrogate_width;
    tr.input = input;

    const bool snn = params.kind == NeuronKind::Plif;
    if (snn) {
        for (const auto& x : input) res.ops.sops_fc1 += double(detail::nnz(x)) * h;
    } else {
        res.ops.macs = ann_macs_per_inference(params.input_dim, h, params.n_classes, steps) *
                       double(batch);
    }

    auto run_block = [&](const std::vector<Mat<S>>& in, LinearParams<S>& fc,
                         BatchNormParams<S>& bn, S tau_raw, BlockTrace<S>& bt) {
        const int n = static_cast<int>(bn.gamma.size());
        std::vector<Mat<S>> z(static_cast<std::size_t>(steps));
        for (int t = 0; t < steps; ++t)
            z[t] = (in[t] * fc.w).rowwise() + fc.b.transpose();

        if (mode == RunMode::Train) {
            // per-feature stats pooled over batch and time
            const double count = double(batch) * steps;
            Vec<S> sum = Vec<S>::Zero(n), sumsq = Vec<S>::Zero(n);
            for (const auto& m : z) {
                sum += m.colwise().sum().transpose();
                sumsq += m.array().square().colwise().sum().transpose().matrix();
            }
            bt.mean = sum / S(count);
            bt.var = (sumsq / S(count) - bt.mean.array().square().matrix()).cwiseMax(S(0));
            const S unbias = count > 1 ? S(count / (count - 1.0)) : S(1);
            bn.running_mean = (S(1) - S(kBnMomentum)) * bn.running_mean + S(kBnMomentum) * bt.mean;
            bn.running_var =
                (S(1) - S(kBnMomentum)) * bn.running_var + S(kBnMomentum) * unbias * bt.var;
        } else {
            bt.mean = bn.running_mean;
            bt.var = bn.running_var;
        }
        const Vec<S> inv_std = (bt.var.array() + S(kBnEps)).rsqrt();

        bt.xhat.resize(static_cast<std::size_t>(steps));
        bt.out.resize(static_cast<std::size_t>(steps));
        if (snn) bt.vpre.resize(static_cast<std::size_t>(steps));

        Mat<S> v;  // membrane, batch x n
        if (snn) v = Mat<S>::Zero(batch, n);
        const S k = snn ? S(1) / ModelParams<S>::tau_from_raw(tau_raw) : S(0);

        for (int t = 0; t < steps; ++t) {
            bt.xhat[t] = (z[t].rowwise() - bt.mean.transpose()).array().rowwise() *
                         inv_std.transpose().array();
            Mat<S> y = (bt.xhat[t].array().rowwise() * bn.gamma.transpose().array())
                           .rowwise() +
                       bn.beta.transpose().array();
            if (snn) {
                v = (S(1) - k) * v + k * y;
                bt.vpre[t] = v;
                Mat<S>& s = bt.out[t];
                if (spike_fn == SpikeFn::Step) {
                    s = (v.array() > S(kVth)).template cast<S>();
                } else {
                    s = v.unaryExpr(
                        [w = surrogate_width](S u) { return atan_spike(u - S(kVth), w); });
                }
                v -= S(kVth) * s;
            } else {
                bt.out[t] = y.cwiseMax(S(0));
            }
        }
    };

    run_block(tr.input, params.fc1, params.bn1, params.tau_raw1, tr.b1);
    if (snn)
        for (const auto& s : tr.b1.out) res.ops.sops_fc2 += double(detail::nnz(s)) * h;
    run_block(tr.b1.out, params.fc2, params.bn2, params.tau_raw2, tr.b2);
    if (snn)
        for (const auto& s : tr.b2.out)
            res.ops.sops_fc3 += double(detail::nnz(s)) * params.n_classes;

    res.logits = Mat<S>::Zero(batch, params.n_classes);
    for (int t = 0; t < steps; ++t)
        res.logits += (tr.b2.out[t] * params.fc3.w).rowwise() + params.fc3.b.transpose();
    res.logits /= S(steps);

    res.ops.sops = res.ops.sops_fc1 + res.ops.sops_fc2 + res.ops.sops_fc3;
    res.ops.inferences = batch;
    return res;
}

// Recount synaptic ops from a stored trace (cross-check of the forward counter).
template <class S>
OpCounter count_sops(const ForwardTrace<S>& trace, int hidden_dim, int n_classes) {
    OpCounter c;
    for (const auto& x : trace.input) c.sops_fc1 += double(detail::nnz(x)) * hidden_dim;
    for (const auto& s : trace.b1.out) c.sops_fc2 += double(detail::nnz(s)) * hidden_dim;
    for (const auto& s : trace.b2.out) c.sops_fc3 += double(detail::nnz(s)) * n_classes;
    c.sops = c.sops_fc1 + c.sops_fc2 + c.sops_fc3;
    c.inferences = trace.batch;
    return c;
}

// ---------------------------------------------------------------------------
// Checkpoint container.  Little-endian layout:
//   magic "SNCLCKP1", u32 version, u8 kind, u32 D, u32 H, u32 C, u32 T, u32 L,
//   u32 tensor count, then per tensor: u16 name length, name bytes,
//   u64 element count, f32 data.
// A JSON sidecar (<path>.json) records seed, encoder mode, alpha and task
// history.

inline constexpr char kCheckpointMagic[8] = {'S', 'N', 'C', 'L', 'C', 'K', 'P', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const std::string& path, ModelParams<float>& params,
                            const nlohmann::json& sidecar) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    auto w32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    w32(kCheckpointVersion);
    const std::uint8_t kind = params.kind == NeuronKind::Plif ? 0 : 1;
    out.write(reinterpret_cast<const char*>(&kind), 1);
    w32(static_cast<std::uint32_t>(params.input_dim));
    w32(static_cast<std::uint32_t>(params.hidden_dim));
    w32(static_cast<std::uint32_t>(params.n_classes));
    w32(static_cast<std::uint32_t>(params.t_steps));
    w32(static_cast<std::uint32_t>(params.window_len));
    const auto tensors = params.state_tensors();
    w32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        const auto len = static_cast<std::uint16_t>(std::strlen(t.name));
        out.write(reinterpret_cast<const char*>(&len), 2);
        out.write(t.name, len);
        const auto n = static_cast<std::uint64_t>(t.size);
        out.write(reinterpret_cast<const char*>(&n), 8);
        out.write(reinterpret_cast<const char*>(t.data), std::streamsize(4) * t.size);
    }
    if (!out) throw InputError("checkpoint write failed: " + path);

    std::ofstream side(path + ".json");
    side << sidecar.dump(2) << '\n';
}

inline std::pair<ModelParams<float>, nlohmann::json> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw DataError("bad magic in checkpoint: " + path);
    auto r32 = [&]() {
        std::uint32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    const auto version = r32();
    if (version != kCheckpointVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    std::uint8_t kind;
    in.read(reinterpret_cast<char*>(&kind), 1);
    const int d = static_cast<int>(r32());
    const int h = static_cast<int>(r32());
    const int c = static_cast<int>(r32());
    const int t_steps = static_cast<int>(r32());
    const int window_len = static_cast<int>(r32());

    auto params = ModelParams<float>::make(kind == 0 ? NeuronKind::Plif : NeuronKind::Relu, d, h,
                                           c, t_steps, window_len, 0);
    auto views = params.state_tensors();
    const auto n_tensors = r32();
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::uint16_t len;
        in.read(reinterpret_cast<char*>(&len), 2);
        std::string name(len, '\0');
        in.read(name.data(), len);
        std::uint64_t n;
        in.read(reinterpret_cast<char*>(&n), 8);
        bool found = false;
        for (auto& v : views) {
            if (name == v.name) {
                if (static_cast<std::uint64_t>(v.size) != n)
                    throw DataError("checkpoint tensor '" + name + "' has wrong size");
                in.read(reinterpret_cast<char*>(v.data), std::streamsize(4) * v.size);
                found = true;
                break;
            }
        }
        if (!found) throw DataError("unknown tensor '" + name + "' in checkpoint");
        if (!in) throw DataError("truncated checkpoint: " + path);
    }

    nlohmann::json sidecar;
    std::ifstream side(path + ".json");
    if (side) side >> sidecar;
    return {std::move(params), std::move(sidecar)};
}

}  // namespace snncl
