#pragma once

#include <snncl/common.hpp>
#include <snncl/encoding.hpp>
#include <snncl/model.hpp>
#include <snncl/timeseries.hpp>

#include <cstdint>
#include <vector>

namespace snncl {

// One model-ready sample: encoded window rows at the subsampled timesteps.
struct EncodedSample {
    MatF x;  // t_steps x input_dim
    std::uint8_t label = 0;
};

struct EncodedDataset {
    std::vector<EncodedSample> samples;
    int steps = 0;
    int input_dim = 0;

    std::vector<std::uint8_t> labels() const {
        std::vector<std::uint8_t> out;
        out.reserve(samples.size());
        for (const auto& s : samples) out.push_back(s.label);
        return out;
    }
};

// Encode at full window resolution, then pick the subsampled rows; this keeps
// each spike's meaning as "changed vs the immediately preceding second".
inline EncodedDataset encode_windows(const std::vector<Window>& windows,
                                     const EncoderConfig& encoder, int t_steps) {
    EncodedDataset ds;
    ds.steps = t_steps;
    if (windows.empty()) return ds;
    const auto idx = subsample_timesteps(static_cast<int>(windows[0].data.rows()), t_steps);
    ds.input_dim = encoder.mode == EncodingMode::Passthrough
                       ? static_cast<int>(windows[0].data.cols())
                       : encoder.input_dim(static_cast<int>(windows[0].data.cols()));
    ds.samples.reserve(windows.size());
    for (const auto& w : windows) {
        const SpikeTensor enc = encode(w.data, encoder);
        EncodedSample s;
        s.label = w.label;
        s.x.resize(t_steps, enc.values.cols());
        for (int t = 0; t < t_steps; ++t)
            s.x.row(t) = enc.values.row(idx[static_cast<std::size_t>(t)]);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

// Stack samples into the time-major layout the network consumes.
inline std::vector<MatF> assemble_batch(const std::vector<const EncodedSample*>& items) {
    if (items.empty()) throw InputError("assemble_batch: empty batch");
    const auto steps = items[0]->x.rows();
    const auto d = items[0]->x.cols();
    std::vector<MatF> input(static_cast<std::size_t>(steps));
    for (Eigen::Index t = 0; t < steps; ++t) {
        auto& m = input[static_cast<std::size_t>(t)];
        m.resize(static_cast<Eigen::Index>(items.size()), d);
        for (std::size_t i = 0; i < items.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = items[i]->x.row(t);
    }
    return input;
}

inline constexpr int kEvalChunk = 256;

// Attack probability per sample (eval mode, running BN stats).
inline std::vector<double> predict_prob(ModelParams<float>& params, const EncodedDataset& data,
                                        OpCounter* ops = nullptr) {
    std::vector<double> probs;
    probs.reserve(data.samples.size());
    for (std::size_t off = 0; off < data.samples.size(); off += kEvalChunk) {
        std::vector<const EncodedSample*> chunk;
        for (std::size_t i = off; i < std::min(off + kEvalChunk, data.samples.size()); ++i)
            chunk.push_back(&data.samples[i]);
        auto res = forward(params, assemble_batch(chunk), RunMode::Eval);
        if (ops) ops->merge(res.ops);
        for (Eigen::Index r = 0; r < res.logits.rows(); ++r) {
            const double margin = double(res.logits(r, 1)) - double(res.logits(r, 0));
            probs.push_back(1.0 / (1.0 + std::exp(-margin)));
        }
    }
    return probs;
}

// argmax with exact ties resolving to normal (conservative against false alarms)
inline std::vector<std::uint8_t> predict_labels(ModelParams<float>& params,
                                                const EncodedDataset& data, double cutoff = 0.5,
                                                OpCounter* ops = nullptr) {
    const auto probs = predict_prob(params, data, ops);
    std::vector<std::uint8_t> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] > cutoff ? 1 : 0;
    return out;
}

}  // namespace snncl
