#pragma once

#include <snncl/common.hpp>
#include <snncl/dataset.hpp>
#include <snncl/metrics.hpp>
#include <snncl/model.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace snncl {

template <class S>
struct Gradients {
    NeuronKind kind = NeuronKind::Plif;
    Mat<S> fc1_w;
    Vec<S> fc1_b, bn1_gamma, bn1_beta;
    Mat<S> fc2_w;
    Vec<S> fc2_b, bn2_gamma, bn2_beta;
    Mat<S> fc3_w;
    Vec<S> fc3_b;
    S tau_raw1{}, tau_raw2{};

    static Gradients zeros_like(const ModelParams<S>& p) {
        Gradients g;
        g.kind = p.kind;
        g.fc1_w = Mat<S>::Zero(p.fc1.w.rows(), p.fc1.w.cols());
        g.fc1_b = Vec<S>::Zero(p.fc1.b.size());
        g.bn1_gamma = Vec<S>::Zero(p.bn1.gamma.size());
        g.bn1_beta = Vec<S>::Zero(p.bn1.beta.size());
        g.fc2_w = Mat<S>::Zero(p.fc2.w.rows(), p.fc2.w.cols());
        g.fc2_b = Vec<S>::Zero(p.fc2.b.size());
        g.bn2_gamma = Vec<S>::Zero(p.bn2.gamma.size());
        g.bn2_beta = Vec<S>::Zero(p.bn2.beta.size());
        g.fc3_w = Mat<S>::Zero(p.fc3.w.rows(), p.fc3.w.cols());
        g.fc3_b = Vec<S>::Zero(p.fc3.b.size());
        g.tau_raw1 = g.tau_raw2 = S(0);
        return g;
    }

    // same canonical order as ModelParams::tensors()
    std::vector<TensorView<S>> tensors() {
        std::vector<TensorView<S>> v = {
            {"fc1.w", fc1_w.data(), fc1_w.size()},
            {"fc1.b", fc1_b.data(), fc1_b.size()},
            {"bn1.gamma", bn1_gamma.data(), bn1_gamma.size()},
            {"bn1.beta", bn1_beta.data(), bn1_beta.size()},
            {"fc2.w", fc2_w.data(), fc2_w.size()},
            {"fc2.b", fc2_b.data(), fc2_b.size()},
            {"bn2.gamma", bn2_gamma.data(), bn2_gamma.size()},
            {"bn2.beta", bn2_beta.data(), bn2_beta.size()},
            {"fc3.w", fc3_w.data(), fc3_w.size()},
            {"fc3.b", fc3_b.data(), fc3_b.size()},
        };
        if (kind == NeuronKind::Plif) {
            v.push_back({"tau_raw1", &tau_raw1, 1});
            v.push_back({"tau_raw2", &tau_raw2, 1});
        }
        return v;
    }
};

template <class S>
struct LossResult {
    S loss{};
    Mat<S> dlogits;
};

// Softmax cross-entropy, mean over the batch, optional per-class weights.
template <class S>
LossResult<S> cross_entropy(const Mat<S>& logits, const std::vector<std::uint8_t>& labels,
                            const std::array<S, 2>& class_weights = {S(1), S(1)}) {
    const auto batch = logits.rows();
    if (static_cast<std::size_t>(batch) != labels.size())
        throw InputError("cross_entropy: batch/label size mismatch");
    LossResult<S> r;
    r.loss = S(0);
    r.dlogits.resize(batch, logits.cols());
    for (Eigen::Index i = 0; i < batch; ++i) {
        if (labels[static_cast<std::size_t>(i)] > 1)
            throw InputError("cross_entropy: label not in {0,1}");
        const int y = labels[static_cast<std::size_t>(i)];
        const S w = class_weights[static_cast<std::size_t>(y)];
        const S m = logits.row(i).maxCoeff();
        Vec<S> ex = (logits.row(i).transpose().array() - m).exp();
        const S z = ex.sum();
        r.loss += w * (std::log(z) + m - logits(i, y));
        r.dlogits.row(i) = (w / z) * ex.transpose();
        r.dlogits(i, y) -= w;
    }
    r.loss /= S(batch);
    r.dlogits /= S(batch);
    return r;
}

namespace detail {

template <class S>
void require_finite(const Mat<S>& m, const char* where) {
    if (!m.allFinite())
        throw std::runtime_error(std::string("backward: non-finite gradient at ") + where);
}

// Reverse pass through one fc -> bn -> neuron block.  `dout[t]` holds dL/d(spike)
// on entry and dL/d(pre-BN activation) on exit.  Returns dL/dk for PLIF blocks
// (k = 1/tau).  The soft reset is differentiated through the same surrogate
// unless detach_reset is set.
template <class S>
S block_backward(const BlockTrace<S>& bt, std::vector<Mat<S>>& dout,
                 const BatchNormParams<S>& bn, S tau_raw, bool train_mode, NeuronKind kind,
                 S surrogate_width, bool detach_reset, Vec<S>& dgamma, Vec<S>& dbeta,
                 const char* name) {
    const int steps = static_cast<int>(dout.size());
    S dk = S(0);

    if (kind == NeuronKind::Plif) {
        const S k = S(1) / ModelParams<S>::tau_from_raw(tau_raw);
        const S vth = S(kVth);
        Mat<S> gvpost = Mat<S>::Zero(dout[0].rows(), dout[0].cols());
        for (int t = steps - 1; t >= 0; --t) {
            // surrogate slope at u = vpre - vth
            Mat<S> slope = bt.vpre[t].unaryExpr(
                [w = surrogate_width](S v) { return atan_surrogate(v - S(kVth), w); });
            Mat<S> gvpre = dout[t].cwiseProduct(slope);
            if (detach_reset)
                gvpre += gvpost;
            else
                gvpre.array() += gvpost.array() * (S(1) - vth * slope.array());

            // input current y[t] = gamma .* xhat[t] + beta
            Mat<S> y = ((bt.xhat[t].array().rowwise() * bn.gamma.transpose().array()).rowwise() +
                        bn.beta.transpose().array())
                           .matrix();
            if (t > 0) {
                Mat<S> vpost_prev = bt.vpre[t - 1] - vth * bt.out[t - 1];
                dk += gvpre.cwiseProduct(y - vpost_prev).sum();
            } else {
                dk += gvpre.cwiseProduct(y).sum();  // v starts at 0
            }
            dout[t] = gvpre * k;                    // now dL/dy[t]
            gvpost = gvpre * (S(1) - k);
        }
    } else {
        for (int t = 0; t < steps; ++t)
            dout[t] = dout[t].cwiseProduct((bt.out[t].array() > S(0)).template cast<S>().matrix());
    }

    // batch-norm backward, stats pooled over (batch x time) in train mode
    const Vec<S> inv_std = (bt.var.array() + S(kBnEps)).rsqrt();
    dgamma.setZero();
    dbeta.setZero();
    for (int t = 0; t < steps; ++t) {
        dgamma += dout[t].cwiseProduct(bt.xhat[t]).colwise().sum().transpose();
        dbeta += dout[t].colwise().sum().transpose();
    }
    if (train_mode) {
        const S n = S(double(dout[0].rows()) * steps);
        Vec<S> sum_dxhat = Vec<S>::Zero(bn.gamma.size());
        Vec<S> sum_dxhat_xhat = Vec<S>::Zero(bn.gamma.size());
        for (int t = 0; t < steps; ++t) {
            Mat<S> dxhat = dout[t].array().rowwise() * bn.gamma.transpose().array();
            sum_dxhat += dxhat.colwise().sum().transpose();
            sum_dxhat_xhat += dxhat.cwiseProduct(bt.xhat[t]).colwise().sum().transpose();
        }
        for (int t = 0; t < steps; ++t) {
            Mat<S> dxhat = (dout[t].array().rowwise() * bn.gamma.transpose().array()).matrix();
            Mat<S> inner = n * dxhat;
            inner.rowwise() -= sum_dxhat.transpose();
            inner.array() -= bt.xhat[t].array().rowwise() * sum_dxhat_xhat.transpose().array();
            dout[t] = ((inner.array().rowwise() * inv_std.transpose().array()) / n).matrix();
        }
    } else {
        for (int t = 0; t < steps; ++t)
            dout[t] = (dout[t].array().rowwise() *
                       (bn.gamma.transpose().array() * inv_std.transpose().array()))
                          .matrix();
    }
    require_finite(dout[steps - 1], name);
    return dk;
}

}  // namespace detail

// Exact reverse-mode gradients for the traced forward under the surrogate
// substitution.  BPTT carries dL/dv across timesteps through both the leak
// term (1 - 1/tau) and the soft-reset path.
template <class S>
Gradients<S> backward(const ForwardTrace<S>& trace, const Mat<S>& dlogits, ModelParams<S>& params,
                      bool detach_reset = false) {
    const int steps = trace.steps;
    if (steps == 0) throw InputError("backward: empty trace");
    detail::require_finite(dlogits, "dlogits");

    auto g = Gradients<S>::zeros_like(params);
    const Mat<S> dlogit_t = dlogits / S(steps);

    // fc3 and dL/d(spike2)
    std::vector<Mat<S>> dout(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
        g.fc3_w += trace.b2.out[t].transpose() * dlogit_t;
        dout[t] = dlogit_t * params.fc3.w.transpose();
    }
    g.fc3_b = S(steps) * dlogit_t.colwise().sum().transpose();

    const S dk2 = detail::block_backward(trace.b2, dout, params.bn2, params.tau_raw2,
                                         trace.train_mode, trace.kind, trace.surrogate_width,
                                         detach_reset, g.bn2_gamma, g.bn2_beta, "block2");
    for (int t = 0; t < steps; ++t) {
        g.fc2_w += trace.b1.out[t].transpose() * dout[t];
        g.fc2_b += dout[t].colwise().sum().transpose();
        dout[t] = dout[t] * params.fc2.w.transpose();
    }

    const S dk1 = detail::block_backward(trace.b1, dout, params.bn1, params.tau_raw1,
                                         trace.train_mode, trace.kind, trace.surrogate_width,
                                         detach_reset, g.bn1_gamma, g.bn1_beta, "block1");
    for (int t = 0; t < steps; ++t) {
        g.fc1_w += trace.input[t].transpose() * dout[t];
        g.fc1_b += dout[t].colwise().sum().transpose();
    }
    detail::require_finite(g.fc1_w, "fc1");

    if (params.kind == NeuronKind::Plif) {
        // k = 1/tau, tau = 1 + softplus(raw)
        const S tau1 = params.tau1(), tau2 = params.tau2();
        g.tau_raw1 = dk1 * (-S(1) / (tau1 * tau1)) * ModelParams<S>::dtau_draw(params.tau_raw1);
        g.tau_raw2 = dk2 * (-S(1) / (tau2 * tau2)) * ModelParams<S>::dtau_draw(params.tau_raw2);
    }
    return g;
}

// Global L2 norm across all tensors; scales everything by max_norm/norm when
// exceeded.  Returns the pre-clip norm.
template <class S>
double clip_gradients(Gradients<S>& grads, double max_norm = 1.0) {
    double sq = 0.0;
    for (auto& t : grads.tensors())
        for (Eigen::Index i = 0; i < t.size; ++i) sq += double(t.data[i]) * double(t.data[i]);
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const S scale = S(max_norm / norm);
        for (auto& t : grads.tensors())
            for (Eigen::Index i = 0; i < t.size; ++i) t.data[i] *= scale;
    }
    return norm;
}

template <class S>
struct AdamState {
    std::vector<Vec<S>> m, v;
    std::int64_t step = 0;
    S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);

    static AdamState make(ModelParams<S>& params) {
        AdamState s;
        for (auto& t : params.tensors()) {
            s.m.push_back(Vec<S>::Zero(t.size));
            s.v.push_back(Vec<S>::Zero(t.size));
        }
        return s;
    }
};

// Standard bias-corrected Adam update.
template <class S>
void adam_step(ModelParams<S>& params, Gradients<S>& grads, AdamState<S>& state, double lr) {
    auto pt = params.tensors();
    auto gt = grads.tensors();
    if (pt.size() != gt.size() || pt.size() != state.m.size())
        throw InputError("adam_step: tensor layout mismatch");
    state.step += 1;
    const S bc1 = S(1) - std::pow(state.beta1, S(state.step));
    const S bc2 = S(1) - std::pow(state.beta2, S(state.step));
    for (std::size_t i = 0; i < pt.size(); ++i) {
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (Eigen::Index j = 0; j < pt[i].size; ++j) {
            const S gj = gt[i].data[j];
            m[j] = state.beta1 * m[j] + (S(1) - state.beta1) * gj;
            v[j] = state.beta2 * v[j] + (S(1) - state.beta2) * gj * gj;
            const S mhat = m[j] / bc1;
            const S vhat = v[j] / bc2;
            pt[i].data[j] -= S(lr) * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

// Class-rebalancing sampler: pick a class uniformly, then a member uniformly;
// equivalently sample weights proportional to inverse class frequency.
struct WeightedSampler {
    std::vector<std::vector<std::size_t>> by_class{2};
    std::mt19937_64 rng;

    WeightedSampler(const std::vector<std::uint8_t>& labels, std::uint64_t seed) : rng(seed) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            by_class[labels[i] ? 1 : 0].push_back(i);
        if (by_class[0].empty() || by_class[1].empty())
            throw InputError("weighted_sampler: both classes must be present");
    }

    std::size_t next() {
        const auto& cls = by_class[rng() & 1];
        return cls[rng() % cls.size()];
    }
};

struct TrainConfig {
    double lr = 1e-3;
    int epochs = 50;
    int lr_step_every = 20;   // epochs between x0.5 steps
    double lr_decay = 0.5;
    double clip_norm = 1.0;
    int batch_size = 64;
    double surrogate_width = 2.0;
    bool detach_reset = false;
    bool class_weights = false;  // sampling already rebalances; off by default
    std::uint64_t seed = 42;

    double lr_at_epoch(int epoch_zero_based) const {
        return lr * std::pow(lr_decay, epoch_zero_based / lr_step_every);
    }

    nlohmann::json to_json() const {
        return {{"lr", lr},
                {"epochs", epochs},
                {"lr_step_every", lr_step_every},
                {"lr_decay", lr_decay},
                {"clip_norm", clip_norm},
                {"batch_size", batch_size},
                {"surrogate_width", surrogate_width},
                {"detach_reset", detach_reset},
                {"class_weights", class_weights},
                {"seed", seed}};
    }

    static TrainConfig from_json(const nlohmann::json& j) {
        TrainConfig c;
        c.lr = j.value("lr", c.lr);
        c.epochs = j.value("epochs", c.epochs);
        c.lr_step_every = j.value("lr_step_every", c.lr_step_every);
        c.lr_decay = j.value("lr_decay", c.lr_decay);
        c.clip_norm = j.value("clip_norm", c.clip_norm);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.surrogate_width = j.value("surrogate_width", c.surrogate_width);
        c.detach_reset = j.value("detach_reset", c.detach_reset);
        c.class_weights = j.value("class_weights", c.class_weights);
        c.seed = j.value("seed", c.seed);
        return c;
    }
};

struct EpochStats {
    int epoch = 0;  // 1-based in reports
    double lr = 0.0;
    double train_loss = 0.0;
    double test_f1 = 0.0;
};

// Continual-learning attachment points.  penalty adds loss terms and their
// gradients; replay injects extra samples into every batch; on_step observes
// the task-loss gradient and the realized parameter change.
struct TrainHooks {
    std::function<double(ModelParams<float>&, Gradients<float>&)> penalty;
    std::function<std::vector<const EncodedSample*>()> replay;
    std::function<void(Gradients<float>&, const std::vector<VecF>&)> on_step;
};

inline F1Result evaluate_f1(ModelParams<float>& params, const EncodedDataset& data,
                            double cutoff = 0.5) {
    return f1_score(predict_labels(params, data, cutoff), data.labels());
}

// Single-task training: weighted sampling, Adam with the stepped LR schedule,
// global-norm clipping, fresh optimizer state per call.
inline std::vector<EpochStats> train_task(ModelParams<float>& params, const EncodedDataset& train,
                                          const EncodedDataset& test, const TrainConfig& cfg,
                                          const TrainHooks& hooks = {}) {
    if (train.samples.empty()) throw InputError("train_task: empty training set");
    const auto labels_all = train.labels();
    WeightedSampler sampler(labels_all, derive_seed(cfg.seed, "sampler"));
    auto opt = AdamState<float>::make(params);  // fresh optimizer per task
    const int steps_per_epoch =
        std::max<int>(1, static_cast<int>(train.samples.size()) / cfg.batch_size);
    // optional inverse-frequency loss weights; sampling already rebalances,
    // so enabling both double-corrects
    std::array<float, 2> cw{1.0f, 1.0f};
    if (cfg.class_weights) {
        const auto n = double(labels_all.size());
        const double n1 = double(std::count(labels_all.begin(), labels_all.end(), 1));
        cw = {float(n / (2.0 * (n - n1))), float(n / (2.0 * n1))};
    }

    std::vector<EpochStats> history;
    std::vector<VecF> before;           // parameter snapshot for on_step
    std::vector<VecF> delta;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr_at_epoch(epoch);
        double loss_acc = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            std::vector<const EncodedSample*> items;
            std::vector<std::uint8_t> labels;
            items.reserve(static_cast<std::size_t>(cfg.batch_size));
            for (int b = 0; b < cfg.batch_size; ++b) {
                const auto i = sampler.next();
                items.push_back(&train.samples[i]);
                labels.push_back(train.samples[i].label);
            }
            if (hooks.replay) {
                for (const auto* s : hooks.replay()) {
                    items.push_back(s);
                    labels.push_back(s->label);
                }
            }

            auto fwd = forward(params, assemble_batch(items), RunMode::Train, SpikeFn::Step,
                               float(cfg.surrogate_width));
            auto loss = cross_entropy(fwd.logits, labels, cw);
            auto grads = backward(fwd.trace, loss.dlogits, params, cfg.detach_reset);

            Gradients<float> task_grads;
            if (hooks.on_step) task_grads = grads;  // pre-penalty copy

            double total_loss = loss.loss;
            if (hooks.penalty) total_loss += hooks.penalty(params, grads);
            clip_gradients(grads, cfg.clip_norm);

            if (hooks.on_step) {
                before.clear();
                for (auto& t : params.tensors())
                    before.emplace_back(Eigen::Map<VecF>(t.data, t.size));
            }
            adam_step(params, grads, opt, lr);
            if (hooks.on_step) {
                delta.clear();
                auto pt = params.tensors();
                for (std::size_t i = 0; i < pt.size(); ++i)
                    delta.emplace_back(Eigen::Map<VecF>(pt[i].data, pt[i].size) - before[i]);
                hooks.on_step(task_grads, delta);
            }
            loss_acc += total_loss;
        }
        EpochStats st;
        st.epoch = epoch + 1;
        st.lr = lr;
        st.train_loss = loss_acc / steps_per_epoch;
        st.test_f1 = test.samples.empty() ? 0.0 : evaluate_f1(params, test).f1;
        history.push_back(st);
    }
    return history;
}

}  // namespace snncl
