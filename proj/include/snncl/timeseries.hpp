#pragma once

#include <snncl/common.hpp>
#include <snncl/schema.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace snncl {

// Uniformly sampled multivariate stream with binary attack labels.
// Values are kept in double in memory; window stores round to f32 on disk.
struct TimeSeries {
    int file_id = 0;
    std::vector<std::int64_t> timestamps;  // seconds, strictly increasing by sample_period
    MatD values;                           // rows x D
    MatU8 labels;                          // rows x n_label_columns
    std::size_t rejected_rows = 0;         // rows dropped at ingestion

    std::int64_t rows() const { return values.rows(); }
    int dim() const { return static_cast<int>(values.cols()); }
};

struct DatasetStats {
    VecD mean, std, min, max;

    int dim() const { return static_cast<int>(mean.size()); }
};

// Per-column mean/std/min/max; population std (divide by N).  Stats must be
// computed from normal-only training data.
inline DatasetStats compute_stats(const TimeSeries& series) {
    if (series.rows() < 2) throw InputError("compute_stats: need at least 2 rows");
    const auto n = static_cast<double>(series.rows());
    DatasetStats st;
    st.mean = series.values.colwise().mean();
    MatD centered = series.values.rowwise() - st.mean.transpose();
    st.std = (centered.array().square().colwise().sum() / n).sqrt();
    st.min = series.values.colwise().minCoeff();
    st.max = series.values.colwise().maxCoeff();
    return st;
}

inline constexpr double kDegenerateStd = 1e-8;

// z-score per column; constant columns (std < 1e-8) map to 0.
inline TimeSeries normalize(const TimeSeries& series, const DatasetStats& stats) {
    if (series.dim() != stats.dim())
        throw InputError("normalize: series has " + std::to_string(series.dim()) +
                         " columns, stats have " + std::to_string(stats.dim()));
    TimeSeries out = series;
    for (int c = 0; c < series.dim(); ++c) {
        if (stats.std[c] < kDegenerateStd)
            out.values.col(c).setZero();
        else
            out.values.col(c) = (series.values.col(c).array() - stats.mean[c]) / stats.std[c];
    }
    return out;
}

inline TimeSeries denormalize(const TimeSeries& series, const DatasetStats& stats) {
    if (series.dim() != stats.dim()) throw InputError("denormalize: dimension mismatch");
    TimeSeries out = series;
    for (int c = 0; c < series.dim(); ++c) {
        if (stats.std[c] < kDegenerateStd) continue;  // not invertible
        out.values.col(c) = series.values.col(c).array() * stats.std[c] + stats.mean[c];
    }
    return out;
}

// L x D slice of a stream; label = 1 iff any covered timestep has the task's
// attack label set.
struct Window {
    MatF data;
    std::uint8_t label = 0;
    int file_id = 0;
    std::int64_t start = 0;
};

inline std::vector<Window> extract_windows(const TimeSeries& series, int window_len, int stride,
                                           int attack_label_index) {
    if (window_len < 1) throw InputError("extract_windows: window length must be >= 1");
    if (stride < 1) throw InputError("extract_windows: stride must be >= 1");
    if (attack_label_index < 0 || attack_label_index >= series.labels.cols())
        throw InputError("extract_windows: attack label index out of range");

    std::vector<Window> out;
    if (series.rows() < window_len) return out;  // not an error, just no windows

    const std::int64_t count = (series.rows() - window_len) / stride + 1;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t s = i * stride;
        Window w;
        w.data = series.values.block(s, 0, window_len, series.dim()).cast<float>();
        w.label = 0;
        for (std::int64_t t = s; t < s + window_len; ++t)
            if (series.labels(t, attack_label_index)) {
                w.label = 1;
                break;
            }
        w.file_id = series.file_id;
        w.start = s;
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace snncl
