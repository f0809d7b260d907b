#pragma once

#include <snncl/common.hpp>
#include <snncl/schema.hpp>
#include <snncl/timeseries.hpp>

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace snncl {

enum class EncodingMode { Binary, PolarityWeighted, TwoChannel, Passthrough };

inline const char* to_string(EncodingMode m) {
    switch (m) {
        case EncodingMode::Binary: return "binary";
        case EncodingMode::PolarityWeighted: return "polarity";
        case EncodingMode::TwoChannel: return "two-channel";
        case EncodingMode::Passthrough: return "passthrough";
    }
    return "?";
}

inline EncodingMode encoding_mode_from_string(const std::string& s) {
    if (s == "binary") return EncodingMode::Binary;
    if (s == "polarity") return EncodingMode::PolarityWeighted;
    if (s == "two-channel") return EncodingMode::TwoChannel;
    if (s == "passthrough") return EncodingMode::Passthrough;
    throw InputError("unknown encoding mode '" + s + "'");
}

// Per-sensor delta thresholds.  Thresholds live in the same units as the
// (normalized) sensors; on z-scored data they all equal alpha numerically but
// are kept per-channel so raw-space operation works too.
struct EncoderConfig {
    double alpha = 0.5;
    VecD thresholds;  // theta_i = alpha * sigma_i
    EncodingMode mode = EncodingMode::PolarityWeighted;

    int input_dim(int sensor_dim) const {
        return mode == EncodingMode::TwoChannel ? 2 * sensor_dim : sensor_dim;
    }
};

inline EncoderConfig fit_thresholds(const DatasetStats& stats, double alpha,
                                    EncodingMode mode = EncodingMode::PolarityWeighted) {
    if (alpha < 0.0) throw InputError("fit_thresholds: alpha must be >= 0");
    EncoderConfig cfg;
    cfg.alpha = alpha;
    cfg.mode = mode;
    cfg.thresholds = alpha * stats.std;
    return cfg;
}

// Event representation of one window.  Binary/PolarityWeighted keep the L x D
// shape; TwoChannel splits polarity into L x 2D with mutually exclusive
// positive ([0,D)) and negative ([D,2D)) channels.  The first timestep has no
// predecessor and never spikes.
struct SpikeTensor {
    MatF values;
    EncodingMode mode = EncodingMode::Binary;
    int sensor_dim = 0;

    // events on the L x D sensor grid, regardless of mode
    std::int64_t spike_count() const {
        if (mode == EncodingMode::Passthrough) return std::int64_t(values.size());
        return (values.array() != 0.0f).count();
    }
};

// Spike when |x_t - x_{t-1}| strictly exceeds the per-sensor threshold.
inline SpikeTensor encode(const MatF& window, const EncoderConfig& config) {
    const int rows = static_cast<int>(window.rows());
    const int d = static_cast<int>(window.cols());
    if (config.mode != EncodingMode::Passthrough && d != config.thresholds.size())
        throw InputError("encode: window has " + std::to_string(d) + " columns, thresholds have " +
                         std::to_string(config.thresholds.size()));

    SpikeTensor out;
    out.mode = config.mode;
    out.sensor_dim = d;
    if (config.mode == EncodingMode::Passthrough) {
        out.values = window;
        return out;
    }

    const int out_d = config.input_dim(d);
    out.values = MatF::Zero(rows, out_d);
    for (int t = 1; t < rows; ++t) {
        for (int i = 0; i < d; ++i) {
            const double delta = double(window(t, i)) - double(window(t - 1, i));
            if (std::abs(delta) > config.thresholds[i]) {
                switch (config.mode) {
                    case EncodingMode::Binary: out.values(t, i) = 1.0f; break;
                    case EncodingMode::PolarityWeighted:
                        out.values(t, i) = delta > 0 ? 1.0f : -1.0f;
                        break;
                    case EncodingMode::TwoChannel:
                        out.values(t, delta > 0 ? i : d + i) = 1.0f;
                        break;
                    default: break;
                }
            }
        }
    }
    return out;
}

struct SpikeRateReport {
    struct Row {
        Subsystem subsystem;
        int sensors = 0;
        double rate = 0.0;
    };
    std::vector<Row> rows;
    double overall_rate = 0.0;
    double sparsity = 1.0;

    nlohmann::json to_json() const {
        nlohmann::json by_sub = nlohmann::json::array();
        for (const auto& r : rows)
            by_sub.push_back({{"subsystem", to_string(r.subsystem)},
                              {"sensors", r.sensors},
                              {"spike_rate", r.rate}});
        return {{"subsystems", by_sub}, {"overall_rate", overall_rate}, {"sparsity", sparsity}};
    }

    std::string to_csv() const {
        std::string s = "subsystem,sensors,spike_rate\n";
        for (const auto& r : rows)
            s += std::string(to_string(r.subsystem)) + "," + std::to_string(r.sensors) + "," +
                 std::to_string(r.rate) + "\n";
        s += "overall," + std::to_string(rows.empty() ? 0 : [&] {
                 int n = 0;
                 for (const auto& r : rows) n += r.sensors;
                 return n;
             }()) +
             "," + std::to_string(overall_rate) + "\n";
        return s;
    }
};

// rate = events / (timesteps * sensors) per subsystem group.
inline SpikeRateReport spike_rate_report(const std::vector<SpikeTensor>& tensors,
                                         const SensorSchema& schema) {
    if (tensors.empty()) throw InputError("spike_rate_report: no tensors");
    const int d = schema.dim();

    std::vector<double> events(static_cast<std::size_t>(d), 0.0);
    double timesteps = 0.0;
    for (const auto& s : tensors) {
        if (s.sensor_dim != d) throw InputError("spike_rate_report: tensor/schema dim mismatch");
        timesteps += double(s.values.rows());
        for (int t = 0; t < s.values.rows(); ++t)
            for (int i = 0; i < d; ++i) {
                const bool pos = s.values(t, i) != 0.0f;
                const bool neg =
                    s.mode == EncodingMode::TwoChannel && s.values(t, d + i) != 0.0f;
                if (pos || neg) events[static_cast<std::size_t>(i)] += 1.0;
            }
    }

    SpikeRateReport rep;
    double total = 0.0;
    for (Subsystem sub :
         {Subsystem::P1, Subsystem::P2, Subsystem::P3, Subsystem::P4}) {
        const auto cols = schema.subsystem_columns(sub);
        if (cols.empty()) continue;
        double e = 0.0;
        for (int c : cols) e += events[static_cast<std::size_t>(c)];
        rep.rows.push_back({sub, static_cast<int>(cols.size()),
                            e / (timesteps * double(cols.size()))});
        total += e;
    }
    rep.overall_rate = total / (timesteps * double(d));
    rep.sparsity = 1.0 - rep.overall_rate;
    return rep;
}

}  // namespace snncl
