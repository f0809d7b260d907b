#pragma once

#include <snncl/common.hpp>
#include <snncl/dataset.hpp>
#include <snncl/metrics.hpp>
#include <snncl/model.hpp>
#include <snncl/task.hpp>
#include <snncl/train.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace snncl {

enum class Strategy { Sequential, EWC, SI, Replay, EWCReplay };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Sequential: return "sequential";
        case Strategy::EWC: return "ewc";
        case Strategy::SI: return "si";
        case Strategy::Replay: return "replay";
        case Strategy::EWCReplay: return "ewc-replay";
    }
    return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "sequential") return Strategy::Sequential;
    if (s == "ewc") return Strategy::EWC;
    if (s == "si") return Strategy::SI;
    if (s == "replay") return Strategy::Replay;
    if (s == "ewc-replay") return Strategy::EWCReplay;
    throw InputError("unknown strategy '" + s + "'");
}

// Flat per-tensor storage aligned with the canonical trainable-tensor order.
struct FlatTensors {
    std::vector<VecF> t;

    static FlatTensors zeros_like(ModelParams<float>& params) {
        FlatTensors f;
        for (auto& v : params.tensors()) f.t.push_back(VecF::Zero(v.size));
        return f;
    }
    static FlatTensors copy_of(ModelParams<float>& params) {
        FlatTensors f;
        for (auto& v : params.tensors()) f.t.emplace_back(Eigen::Map<VecF>(v.data, v.size));
        return f;
    }
    static FlatTensors from_grads(Gradients<float>& grads) {
        FlatTensors f;
        for (auto& v : grads.tensors()) f.t.emplace_back(Eigen::Map<VecF>(v.data, v.size));
        return f;
    }
};

// Diagonal curvature proxy for one completed task plus the parameter anchor.
struct FisherDiag {
    FlatTensors fisher;
    FlatTensors anchor;
    int task_id = 0;
};

// F_i = E_x E_{y~p(y|x)} (d log p(y|x) / d theta_i)^2 over a sample of the
// task's data, in eval mode.  Anchors the current parameters.
inline FisherDiag compute_fisher(ModelParams<float>& params, const EncodedDataset& data,
                                 int n_samples, std::uint64_t seed, int task_id = 0) {
    if (data.samples.empty()) throw InputError("compute_fisher: empty dataset");
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(n_samples), data.samples.size());

    std::mt19937_64 rng(derive_seed(seed, "fisher", static_cast<std::uint64_t>(task_id)));
    auto picks = detail::sample_indices(data.samples.size(), n, rng);

    FisherDiag out;
    out.task_id = task_id;
    out.fisher = FlatTensors::zeros_like(params);
    out.anchor = FlatTensors::copy_of(params);

    for (auto i : picks) {
        std::vector<const EncodedSample*> one = {&data.samples[i]};
        auto fwd = forward(params, assemble_batch(one), RunMode::Eval);
        // predictive distribution
        const float m = fwd.logits.row(0).maxCoeff();
        VecF p = (fwd.logits.row(0).transpose().array() - m).exp();
        p /= p.sum();

        for (int y = 0; y < params.n_classes; ++y) {
            MatF dlogits = -p.transpose();  // d log p(y|x) / d logits = onehot - softmax
            dlogits(0, y) += 1.0f;
            auto g = backward(fwd.trace, dlogits, params);
            auto gt = g.tensors();
            for (std::size_t k = 0; k < gt.size(); ++k)
                out.fisher.t[k] += p[y] * Eigen::Map<VecF>(gt[k].data, gt[k].size)
                                              .array()
                                              .square()
                                              .matrix();
        }
    }
    for (auto& f : out.fisher.t) f /= float(n);
    return out;
}

// lambda/2 * sum_i w_i (theta_i - anchor_i)^2 added to the loss,
// lambda * w_i (theta_i - anchor_i) added to the gradient.  Shared by EWC
// (w = Fisher) and SI (w = consolidated importance).
inline double quadratic_penalty(ModelParams<float>& params, const FlatTensors& weights,
                                const FlatTensors& anchor, double lambda,
                                Gradients<float>& grads) {
    auto pt = params.tensors();
    auto gt = grads.tensors();
    double loss = 0.0;
    for (std::size_t k = 0; k < pt.size(); ++k) {
        Eigen::Map<VecF> theta(pt[k].data, pt[k].size);
        Eigen::Map<VecF> grad(gt[k].data, gt[k].size);
        const VecF diff = theta - anchor.t[k];
        loss += 0.5 * lambda * double(weights.t[k].cwiseProduct(diff).dot(diff));
        grad += float(lambda) * weights.t[k].cwiseProduct(diff);
    }
    return loss;
}

// One penalty per completed task; anchors accumulate.
inline double ewc_penalty(ModelParams<float>& params, const std::vector<FisherDiag>& anchors,
                          double lambda, Gradients<float>& grads) {
    double loss = 0.0;
    for (const auto& a : anchors) loss += quadratic_penalty(params, a.fisher, a.anchor, lambda, grads);
    return loss;
}

// Synaptic-intelligence bookkeeping: a running path integral of task-loss
// reduction per parameter, consolidated into importance at task boundaries.
struct SIState {
    FlatTensors omega;       // running path integral, reset at consolidation
    FlatTensors importance;  // consolidated Omega
    FlatTensors prev_params; // parameters at last consolidation (penalty anchor)
    double xi = 0.1;
    bool has_anchor = false;

    static SIState make(ModelParams<float>& params, double xi = 0.1) {
        SIState s;
        s.omega = FlatTensors::zeros_like(params);
        s.importance = FlatTensors::zeros_like(params);
        s.prev_params = FlatTensors::copy_of(params);
        s.xi = xi;
        return s;
    }
};

// Called once per optimizer step with the task-loss gradient (penalty terms
// excluded) and the realized parameter change: omega += -g . delta.
inline void si_accumulate(SIState& state, Gradients<float>& task_grads,
                          const std::vector<VecF>& delta) {
    auto gt = task_grads.tensors();
    for (std::size_t k = 0; k < gt.size(); ++k)
        state.omega.t[k] -= Eigen::Map<VecF>(gt[k].data, gt[k].size).cwiseProduct(delta[k]);
}

// Omega_i += omega_i / ((theta_i - theta_prev_i)^2 + xi); omega resets and the
// anchor moves to the current parameters.
inline void si_consolidate(SIState& state, ModelParams<float>& params) {
    auto pt = params.tensors();
    for (std::size_t k = 0; k < pt.size(); ++k) {
        Eigen::Map<VecF> theta(pt[k].data, pt[k].size);
        const VecF diff = theta - state.prev_params.t[k];
        state.importance.t[k] +=
            (state.omega.t[k].array() / (diff.array().square() + float(state.xi))).matrix();
        state.omega.t[k].setZero();
        state.prev_params.t[k] = theta;
    }
    state.has_anchor = true;
}

// Per-task reservoir of encoded training samples for rehearsal.
struct ReplayBuffer {
    std::vector<std::vector<EncodedSample>> per_task;
    int cap = 500;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& t : per_task) n += t.size();
        return n;
    }
};

// Label-stratified uniform sample without replacement, up to cap.
inline void replay_build(ReplayBuffer& buffer, const EncodedDataset& train_split,
                         std::uint64_t seed) {
    std::vector<EncodedSample> stored;
    const auto& samples = train_split.samples;
    if (buffer.cap > 0 && !samples.empty()) {
        if (samples.size() <= static_cast<std::size_t>(buffer.cap)) {
            stored = samples;
        } else {
            std::vector<std::size_t> pos, neg;
            for (std::size_t i = 0; i < samples.size(); ++i)
                (samples[i].label ? pos : neg).push_back(i);
            const auto n_pos = static_cast<std::size_t>(
                std::llround(double(buffer.cap) * double(pos.size()) / double(samples.size())));
            const auto n_neg = static_cast<std::size_t>(buffer.cap) - n_pos;
            std::mt19937_64 rng(derive_seed(seed, "replay-build", buffer.per_task.size()));
            for (auto i : detail::sample_indices(pos.size(), n_pos, rng))
                stored.push_back(samples[pos[i]]);
            for (auto i : detail::sample_indices(neg.size(), n_neg, rng))
                stored.push_back(samples[neg[i]]);
        }
    }
    buffer.per_task.push_back(std::move(stored));
}

// k samples uniform over the union of stored tasks; with replacement when the
// buffer is smaller than k, empty when nothing is stored (first task).
inline std::vector<const EncodedSample*> replay_mix(const ReplayBuffer& buffer, int k,
                                                    std::mt19937_64& rng) {
    std::vector<const EncodedSample*> flat;
    for (const auto& t : buffer.per_task)
        for (const auto& s : t) flat.push_back(&s);
    std::vector<const EncodedSample*> out;
    if (flat.empty() || k <= 0) return out;
    if (flat.size() < static_cast<std::size_t>(k)) {
        for (int i = 0; i < k; ++i) out.push_back(flat[rng() % flat.size()]);
    } else {
        for (auto i : detail::sample_indices(flat.size(), static_cast<std::size_t>(k), rng))
            out.push_back(flat[i]);
    }
    return out;
}

struct ContinualConfig {
    TrainConfig train;
    double lambda = 500.0;   // EWC and SI regularization strength
    int fisher_samples = 1000;
    int buffer_cap = 500;
    int replay_k = 32;
    double si_xi = 0.1;

    nlohmann::json to_json() const {
        return {{"train", train.to_json()}, {"lambda", lambda},
                {"fisher_samples", fisher_samples}, {"buffer_cap", buffer_cap},
                {"replay_k", replay_k}, {"si_xi", si_xi}};
    }

    static ContinualConfig from_json(const nlohmann::json& j) {
        ContinualConfig c;
        if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
        c.lambda = j.value("lambda", c.lambda);
        c.fisher_samples = j.value("fisher_samples", c.fisher_samples);
        c.buffer_cap = j.value("buffer_cap", c.buffer_cap);
        c.replay_k = j.value("replay_k", c.replay_k);
        c.si_xi = j.value("si_xi", c.si_xi);
        return c;
    }
};

struct SequenceResult {
    ModelParams<float> params;
    TaskMatrix matrix;
    std::vector<std::vector<EpochStats>> histories;  // per task
    std::vector<FisherDiag> anchors;                 // EWC variants
    ReplayBuffer buffer;                             // replay variants
    std::vector<ModelParams<float>> boundary_params; // snapshot after each task
};

// Train the task sequence in order under one strategy, filling row j of the
// TaskMatrix with F1 on every completed task after training task j.
inline SequenceResult run_sequence(Strategy strategy, const std::vector<EncodedDataset>& train,
                                   const std::vector<EncodedDataset>& test,
                                   const ContinualConfig& cfg, ModelParams<float> params) {
    if (train.size() != test.size() || train.empty())
        throw InputError("run_sequence: train/test task lists must match and be non-empty");
    const int k_tasks = static_cast<int>(train.size());
    const bool use_ewc = strategy == Strategy::EWC || strategy == Strategy::EWCReplay;
    const bool use_replay = strategy == Strategy::Replay || strategy == Strategy::EWCReplay;
    const bool use_si = strategy == Strategy::SI;

    SequenceResult res;
    res.matrix = TaskMatrix(k_tasks);
    res.buffer.cap = cfg.buffer_cap;
    SIState si = SIState::make(params, cfg.si_xi);

    for (int j = 0; j < k_tasks; ++j) {
        TrainHooks hooks;
        if (use_ewc && !res.anchors.empty())
            hooks.penalty = [&](ModelParams<float>& p, Gradients<float>& g) {
                return ewc_penalty(p, res.anchors, cfg.lambda, g);
            };
        if (use_si && si.has_anchor)
            hooks.penalty = [&](ModelParams<float>& p, Gradients<float>& g) {
                return quadratic_penalty(p, si.importance, si.prev_params, cfg.lambda, g);
            };
        std::mt19937_64 replay_rng(
            derive_seed(cfg.train.seed, "replay-mix", static_cast<std::uint64_t>(j)));
        if (use_replay)
            hooks.replay = [&]() { return replay_mix(res.buffer, cfg.replay_k, replay_rng); };
        if (use_si)
            hooks.on_step = [&](Gradients<float>& g, const std::vector<VecF>& delta) {
                si_accumulate(si, g, delta);
            };

        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(cfg.train.seed, "task", static_cast<std::uint64_t>(j));
        res.histories.push_back(train_task(params, train[j], test[j], tc, hooks));

        for (int k = 0; k <= j; ++k)
            res.matrix.set(j, k, evaluate_f1(params, test[k]).f1);

        if (use_ewc)
            res.anchors.push_back(compute_fisher(params, train[j], cfg.fisher_samples,
                                                 cfg.train.seed, j));
        if (use_si) si_consolidate(si, params);
        if (use_replay) replay_build(res.buffer, train[j], cfg.train.seed);
        res.boundary_params.push_back(params);
    }
    res.params = std::move(params);
    return res;
}

struct JointResult {
    ModelParams<float> params;
    std::vector<double> per_task_f1;
    std::vector<EpochStats> history;
};

// Oracle: one training run on the union of all task training sets.
inline JointResult joint_train(const std::vector<EncodedDataset>& train,
                               const std::vector<EncodedDataset>& test, const TrainConfig& cfg,
                               ModelParams<float> params) {
    if (train.empty()) throw InputError("joint_train: no tasks");
    EncodedDataset merged;
    merged.steps = train[0].steps;
    merged.input_dim = train[0].input_dim;
    for (const auto& t : train)
        merged.samples.insert(merged.samples.end(), t.samples.begin(), t.samples.end());
    EncodedDataset merged_test;
    merged_test.steps = merged.steps;
    merged_test.input_dim = merged.input_dim;
    for (const auto& t : test)
        merged_test.samples.insert(merged_test.samples.end(), t.samples.begin(), t.samples.end());

    TrainConfig tc = cfg;
    tc.seed = derive_seed(cfg.seed, "joint");
    JointResult res;
    res.history = train_task(params, merged, merged_test, tc);
    for (const auto& t : test) res.per_task_f1.push_back(evaluate_f1(params, t).f1);
    res.params = std::move(params);
    return res;
}

}  // namespace snncl
