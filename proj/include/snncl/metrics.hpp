#pragma once

#include <snncl/common.hpp>
#include <snncl/dataset.hpp>
#include <snncl/encoding.hpp>
#include <snncl/timeseries.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace snncl {

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct F1Result {
    double f1 = 0.0, precision = 0.0, recall = 0.0;
    ConfusionCounts counts;
};

// Zero-division conventions: a degenerate all-correct-negative evaluation
// scores 1; any error with zero true positives scores 0.
inline F1Result f1_score(const std::vector<std::uint8_t>& predictions,
                         const std::vector<std::uint8_t>& labels) {
    if (predictions.size() != labels.size())
        throw InputError("f1_score: length mismatch " + std::to_string(predictions.size()) +
                         " vs " + std::to_string(labels.size()));
    F1Result r;
    auto& c = r.counts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool p = predictions[i] != 0, y = labels[i] != 0;
        if (p && y) ++c.tp;
        else if (p && !y) ++c.fp;
        else if (!p && y) ++c.fn;
        else ++c.tn;
    }
    if (c.tp == 0) {
        const bool clean = c.fp == 0 && c.fn == 0;
        r.precision = r.recall = r.f1 = clean ? 1.0 : 0.0;
        return r;
    }
    r.precision = double(c.tp) / double(c.tp + c.fp);
    r.recall = double(c.tp) / double(c.tp + c.fn);
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

// F[j][k] = F1 on task k after training through task j (k <= j).
struct TaskMatrix {
    int n_tasks = 0;
    MatD f;  // NaN above the diagonal

    explicit TaskMatrix(int k = 0) : n_tasks(k) {
        f = MatD::Constant(k, k, std::nan(""));
    }

    void set(int after_task, int on_task, double value) { f(after_task, on_task) = value; }
    double get(int after_task, int on_task) const { return f(after_task, on_task); }

    std::vector<double> final_row() const {
        std::vector<double> out;
        for (int k = 0; k < n_tasks; ++k) out.push_back(f(n_tasks - 1, k));
        return out;
    }

    double average_final_f1() const {
        double acc = 0.0;
        for (int k = 0; k < n_tasks; ++k) acc += f(n_tasks - 1, k);
        return n_tasks ? acc / n_tasks : 0.0;
    }

    std::string to_csv() const {
        std::string s = "after_task";
        for (int k = 0; k < n_tasks; ++k) s += ",task_" + std::to_string(k + 1);
        s += "\n";
        for (int j = 0; j < n_tasks; ++j) {
            s += std::to_string(j + 1);
            for (int k = 0; k < n_tasks; ++k) {
                s += ",";
                if (k <= j) s += std::to_string(f(j, k));
            }
            s += "\n";
        }
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (int j = 0; j < n_tasks; ++j) {
            nlohmann::json row = nlohmann::json::array();
            for (int k = 0; k <= j; ++k) row.push_back(f(j, k));
            rows.push_back(row);
        }
        return rows;
    }

    static TaskMatrix from_json(const nlohmann::json& j) {
        TaskMatrix m(static_cast<int>(j.size()));
        for (int r = 0; r < m.n_tasks; ++r)
            for (int k = 0; k <= r; ++k) m.set(r, k, j.at(r).at(k).get<double>());
        return m;
    }
};

struct ForgettingResult {
    bool applicable = false;        // needs K >= 2
    double average = 0.0;           // mean over tasks 1..K-1 of clamped drop
    std::vector<double> per_task;   // max(0, f_k(k) - f_k(K)) for k < K
};

// Mean clamped degradation between each task's F1 right after training and
// its final F1 after the whole sequence.
inline ForgettingResult average_forgetting(const TaskMatrix& m) {
    ForgettingResult r;
    const int k_total = m.n_tasks;
    if (k_total < 2) return r;
    r.applicable = true;
    double acc = 0.0;
    for (int k = 0; k < k_total - 1; ++k) {
        const double drop = std::max(0.0, m.get(k, k) - m.get(k_total - 1, k));
        r.per_task.push_back(drop);
        acc += drop;
    }
    r.average = acc / double(k_total - 1);
    return r;
}

// ---------------------------------------------------------------------------
// Detection latency

struct AttackEvent {
    std::int64_t onset = 0;  // first labeled attack timestep
    std::int64_t end = 0;    // one past the last labeled timestep
    std::optional<std::int64_t> detected_at;  // end timestep of the first positive window
    double delay_seconds() const {
        return detected_at ? double(*detected_at - onset) : -1.0;
    }
};

struct LatencyReport {
    std::vector<AttackEvent> events;
    std::int64_t grace = 60;

    std::int64_t detected() const {
        std::int64_t n = 0;
        for (const auto& e : events) n += e.detected_at.has_value();
        return n;
    }
    double mean_delay() const {
        double acc = 0.0;
        std::int64_t n = 0;
        for (const auto& e : events)
            if (e.detected_at) {
                acc += e.delay_seconds();
                ++n;
            }
        return n ? acc / double(n) : 0.0;
    }
    double median_delay() const {
        std::vector<double> d;
        for (const auto& e : events)
            if (e.detected_at) d.push_back(e.delay_seconds());
        if (d.empty()) return 0.0;
        std::sort(d.begin(), d.end());
        const auto n = d.size();
        return n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
    }
    double max_delay() const {
        double m = 0.0;
        for (const auto& e : events)
            if (e.detected_at) m = std::max(m, e.delay_seconds());
        return m;
    }
    std::int64_t detected_within(double seconds) const {
        std::int64_t n = 0;
        for (const auto& e : events) n += e.detected_at && e.delay_seconds() <= seconds;
        return n;
    }

    nlohmann::json to_json() const {
        nlohmann::json ev = nlohmann::json::array();
        for (const auto& e : events) {
            nlohmann::json item = {{"onset", e.onset}, {"end", e.end}};
            if (e.detected_at) {
                item["detected_at"] = *e.detected_at;
                item["delay_s"] = e.delay_seconds();
            } else {
                item["detected_at"] = nullptr;
            }
            ev.push_back(item);
        }
        return {{"events", ev},
                {"attacks_tested", events.size()},
                {"attacks_detected", detected()},
                {"mean_delay_s", mean_delay()},
                {"median_delay_s", median_delay()},
                {"max_delay_s", max_delay()},
                {"detected_within_10s", detected_within(10)},
                {"detected_within_60s", detected_within(60)},
                {"grace_s", grace}};
    }
};

// Maximal runs of the attack label.
inline std::vector<AttackEvent> attack_events(const TimeSeries& stream, int label_col) {
    std::vector<AttackEvent> events;
    bool in_event = false;
    for (std::int64_t t = 0; t < stream.rows(); ++t) {
        const bool on = stream.labels(t, label_col) != 0;
        if (on && !in_event) {
            events.push_back({t, t + 1, std::nullopt});
            in_event = true;
        } else if (on) {
            events.back().end = t + 1;
        } else {
            in_event = false;
        }
    }
    return events;
}

// Core protocol on precomputed stride-1 predictions.  predictions[i] is the
// class of the window ending at timestep first_end + i.  For each event, the
// first positive window ending in [onset, event end + grace) counts as the
// detection; a window ending before onset cannot pre-detect it.
inline LatencyReport latency_from_predictions(const std::vector<std::uint8_t>& predictions,
                                              std::int64_t first_end,
                                              std::vector<AttackEvent> events,
                                              std::int64_t grace = 60) {
    LatencyReport rep;
    rep.grace = grace;
    const auto last_end = first_end + static_cast<std::int64_t>(predictions.size()) - 1;
    for (auto& e : events) {
        const std::int64_t from = std::max(e.onset, first_end);
        const std::int64_t to = std::min(e.end + grace - 1, last_end);
        for (std::int64_t end_t = from; end_t <= to; ++end_t) {
            if (predictions[static_cast<std::size_t>(end_t - first_end)]) {
                e.detected_at = end_t;
                break;
            }
        }
        rep.events.push_back(e);
    }
    return rep;
}

// Full protocol: stride-1 windows over a normalized stream, encode, classify,
// then scan each labeled attack event for its first positive window.
inline LatencyReport detect_latency(ModelParams<float>& params, const TimeSeries& stream,
                                    const EncoderConfig& encoder, int attack_label_col,
                                    double cutoff = 0.5, std::int64_t grace = 60) {
    const auto events = attack_events(stream, attack_label_col);
    if (events.empty()) return LatencyReport{{}, grace};
    const int window_len = params.window_len;
    if (stream.rows() < window_len)
        throw InputError("detect_latency: stream shorter than one window");

    const auto windows = extract_windows(stream, window_len, 1, attack_label_col);
    const auto encoded = encode_windows(windows, encoder, params.t_steps);
    const auto preds = predict_labels(params, encoded, cutoff);
    return latency_from_predictions(preds, window_len - 1, events, grace);
}

// ---------------------------------------------------------------------------
// Energy projection

inline constexpr double kEnergyPerMacPj = 4.6;  // 45nm CMOS multiply-accumulate
inline constexpr double kEnergyPerSopPj = 23.0; // neuromorphic synaptic op

struct EnergyReport {
    double macs = 0.0;
    double sops = 0.0;

    bool degenerate() const { return sops <= 0.0; }
    double op_ratio() const {
        return degenerate() ? std::numeric_limits<double>::infinity() : macs / sops;
    }
    double energy_ratio() const {
        return degenerate() ? std::numeric_limits<double>::infinity()
                            : (macs * kEnergyPerMacPj) / (sops * kEnergyPerSopPj);
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"macs", macs},
                            {"sops", sops},
                            {"e_mac_pj", kEnergyPerMacPj},
                            {"e_sop_pj", kEnergyPerSopPj},
                            {"degenerate", degenerate()}};
        if (degenerate()) {
            j["op_ratio"] = "inf";
            j["energy_ratio"] = "inf";
        } else {
            j["op_ratio"] = op_ratio();
            j["energy_ratio"] = energy_ratio();
        }
        return j;
    }
};

inline EnergyReport energy_report(double macs_per_inference, double sops_per_inference) {
    return EnergyReport{macs_per_inference, sops_per_inference};
}

}  // namespace snncl
