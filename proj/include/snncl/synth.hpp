#pragma once

#include <snncl/common.hpp>
#include <snncl/schema.hpp>
#include <snncl/timeseries.hpp>

#include <json.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace snncl {

// Channel dynamics classes for the synthetic multi-subsystem generator.
// The contrast (fast mechanical vs slow thermal vs near-constant chemical)
// is what gives delta encoding its per-subsystem rate spread.
enum class Dynamics { SlowDrift, FastOscillation, NearConstant };

enum class AttackType { SetpointShift, StuckSensor, OscillationInjection };

inline const char* to_string(Dynamics d) {
    switch (d) {
        case Dynamics::SlowDrift: return "slow_drift";
        case Dynamics::FastOscillation: return "fast_oscillation";
        case Dynamics::NearConstant: return "near_constant";
    }
    return "?";
}

inline Dynamics dynamics_from_string(const std::string& s) {
    if (s == "slow_drift") return Dynamics::SlowDrift;
    if (s == "fast_oscillation") return Dynamics::FastOscillation;
    if (s == "near_constant") return Dynamics::NearConstant;
    throw InputError("unknown dynamics class '" + s + "'");
}

inline const char* to_string(AttackType a) {
    switch (a) {
        case AttackType::SetpointShift: return "setpoint_shift";
        case AttackType::StuckSensor: return "stuck_sensor";
        case AttackType::OscillationInjection: return "oscillation_injection";
    }
    return "?";
}

inline AttackType attack_type_from_string(const std::string& s) {
    if (s == "setpoint_shift") return AttackType::SetpointShift;
    if (s == "stuck_sensor") return AttackType::StuckSensor;
    if (s == "oscillation_injection") return AttackType::OscillationInjection;
    throw InputError("unknown attack type '" + s + "'");
}

struct SubsystemSpec {
    Subsystem id = Subsystem::P1;
    int channels = 1;
    Dynamics dynamics = Dynamics::SlowDrift;
    // Benign common-mode transients (soot blowing, valve tests): short bumps
    // hitting every channel of the group at once, label stays 0.  In spike
    // space they look like brief attacks, so the detector has to discriminate
    // by extent rather than mere spike presence.
    double burst_rate = 0.0;  // per-step start probability for the group
    double burst_amp = 1.0;   // amplitude in channel-sigma units
    int burst_len = 5;
};

struct AttackSegment {
    AttackType type = AttackType::OscillationInjection;
    Subsystem target = Subsystem::P1;
    std::int64_t onset = 0;
    std::int64_t duration = 0;  // labels set exactly on [onset, onset+duration)
    double magnitude = 4.0;     // in channel-sigma units
    double period = 6.0;        // oscillation / ripple period, steps
    // Physical cross-coupling: the attacked process disturbs a neighbouring
    // subsystem's channels without tripping that subsystem's label (the
    // testbed processes share a loop).  magnitude in sigma units; <= 0 off.
    Subsystem couple_target = Subsystem::P4;
    double couple_magnitude = 0.0;
    double couple_period = 4.0;
};

struct SynthConfig {
    std::vector<SubsystemSpec> subsystems;
    std::int64_t train_rows = 20000;
    std::int64_t test_rows = 9000;
    std::vector<AttackSegment> attacks;  // applied to the test stream

    nlohmann::json to_json() const {
        nlohmann::json subs = nlohmann::json::array();
        for (const auto& s : subsystems)
            subs.push_back({{"subsystem", to_string(s.id)},
                            {"channels", s.channels},
                            {"dynamics", to_string(s.dynamics)},
                            {"burst_rate", s.burst_rate},
                            {"burst_amp", s.burst_amp},
                            {"burst_len", s.burst_len}});
        nlohmann::json atk = nlohmann::json::array();
        for (const auto& a : attacks) {
            nlohmann::json item = {{"type", to_string(a.type)},
                                   {"target", to_string(a.target)},
                                   {"onset", a.onset},
                                   {"duration", a.duration},
                                   {"magnitude", a.magnitude},
                                   {"period", a.period}};
            if (a.couple_magnitude > 0.0) {
                item["couple_target"] = to_string(a.couple_target);
                item["couple_magnitude"] = a.couple_magnitude;
                item["couple_period"] = a.couple_period;
            }
            atk.push_back(item);
        }
        return {{"subsystems", subs},
                {"train_rows", train_rows},
                {"test_rows", test_rows},
                {"attacks", atk}};
    }

    static SynthConfig from_json(const nlohmann::json& j) {
        SynthConfig c;
        c.subsystems.clear();
        for (const auto& s : j.at("subsystems")) {
            SubsystemSpec sp;
            sp.id = subsystem_from_string(s.at("subsystem").get<std::string>());
            sp.channels = s.at("channels").get<int>();
            sp.dynamics = dynamics_from_string(s.at("dynamics").get<std::string>());
            sp.burst_rate = s.value("burst_rate", 0.0);
            sp.burst_amp = s.value("burst_amp", 1.0);
            sp.burst_len = s.value("burst_len", 5);
            c.subsystems.push_back(sp);
        }
        c.train_rows = j.value("train_rows", std::int64_t{20000});
        c.test_rows = j.value("test_rows", std::int64_t{9000});
        c.attacks.clear();
        for (const auto& a : j.value("attacks", nlohmann::json::array())) {
            AttackSegment seg;
            seg.type = attack_type_from_string(a.at("type").get<std::string>());
            seg.target = subsystem_from_string(a.at("target").get<std::string>());
            seg.onset = a.at("onset").get<std::int64_t>();
            seg.duration = a.at("duration").get<std::int64_t>();
            seg.magnitude = a.value("magnitude", 4.0);
            seg.period = a.value("period", 6.0);
            if (a.contains("couple_target")) {
                seg.couple_target = subsystem_from_string(a.at("couple_target").get<std::string>());
                seg.couple_magnitude = a.value("couple_magnitude", 0.0);
                seg.couple_period = a.value("couple_period", 4.0);
            }
            c.attacks.push_back(seg);
        }
        return c;
    }

    // Three sequentially deployed subsystems with contrasting dynamics plus an
    // unattacked mixed group.  Task 1 attacks are deliberately close in
    // amplitude to the benign P1 transients so the learned boundary is fragile
    // under later tasks; task 2 attacks freeze normally-busy channels; task 3
    // attacks are loud oscillations on near-silent channels.
    static SynthConfig three_task_default() {
        SynthConfig c;
        c.subsystems = {
            {Subsystem::P1, 6, Dynamics::SlowDrift, 0.006, 1.35, 12},
            {Subsystem::P2, 5, Dynamics::FastOscillation, 0.0, 1.0, 5},
            {Subsystem::P3, 4, Dynamics::NearConstant, 0.0, 1.0, 5},
            {Subsystem::P4, 2, Dynamics::FastOscillation, 0.0, 1.0, 5},
            {Subsystem::P4, 2, Dynamics::SlowDrift, 0.0, 1.0, 5},
        };
        c.train_rows = 20000;
        c.test_rows = 9000;
        for (int k = 0; k < 5; ++k) {
            const std::int64_t base = 300 + 1700 * k;
            // boiler attacks share the benign transients' amplitude; only their
            // extent separates them, which keeps the task-1 margin narrow
            AttackSegment p1{AttackType::OscillationInjection, Subsystem::P1, base, 55, 1.35, 5.0};
            AttackSegment p2{AttackType::StuckSensor, Subsystem::P2, base + 500, 60, 0.0, 6.0};
            p2.couple_target = Subsystem::P1;
            p2.couple_magnitude = 1.35;  // boiler reacts to the frozen turbine loop
            p2.couple_period = 4.0;
            AttackSegment p3{AttackType::OscillationInjection, Subsystem::P3, base + 1050, 50, 8.0,
                             5.0};
            p3.couple_target = Subsystem::P1;
            p3.couple_magnitude = 1.35;
            p3.couple_period = 4.0;
            c.attacks.push_back(p1);
            c.attacks.push_back(p2);
            c.attacks.push_back(p3);
        }
        return c;
    }

    // Single-subsystem stream whose attacks are step changes visible in the
    // very first attacked timestep; used by the detection-latency protocol.
    static SynthConfig latency_demo_config() {
        SynthConfig c;
        c.subsystems = {
            {Subsystem::P1, 2, Dynamics::SlowDrift, 0.0, 1.0, 5},
            {Subsystem::P2, 2, Dynamics::FastOscillation, 0.0, 1.0, 5},
            {Subsystem::P3, 3, Dynamics::NearConstant, 0.0, 1.0, 5},
        };
        c.train_rows = 6000;
        c.test_rows = 4000;
        for (int k = 0; k < 6; ++k)
            c.attacks.push_back(
                {AttackType::SetpointShift, Subsystem::P3, 300 + 550 * k, 50, 8.0, 10.0});
        return c;
    }
};

struct SynthResult {
    TimeSeries train;
    TimeSeries test;
    SensorSchema schema;
};

namespace detail {

inline void generate_channel(std::vector<double>& x, Dynamics dyn, std::mt19937_64& rng) {
    const auto n = static_cast<std::int64_t>(x.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    switch (dyn) {
        case Dynamics::SlowDrift: {
            const double period = 500.0 + 400.0 * unif(rng);
            const double phase = 2.0 * M_PI * unif(rng);
            const double amp = 0.9 + 0.2 * unif(rng);
            double ar = 0.0;
            for (std::int64_t t = 0; t < n; ++t) {
                ar = 0.95 * ar + 0.01 * gauss(rng);
                x[t] = amp * std::sin(2.0 * M_PI * t / period + phase) + ar;
            }
            break;
        }
        case Dynamics::FastOscillation: {
            const double period = 10.0 + 8.0 * unif(rng);
            const double phase = 2.0 * M_PI * unif(rng);
            const double amp = 0.8 + 0.4 * unif(rng);
            double ar = 0.0;
            for (std::int64_t t = 0; t < n; ++t) {
                ar = 0.2 * ar + 0.25 * gauss(rng);
                x[t] = amp * std::sin(2.0 * M_PI * t / period + phase) + ar;
            }
            break;
        }
        case Dynamics::NearConstant: {
            const double base = 2.0 * unif(rng) - 1.0;
            double offset = 0.0;
            for (std::int64_t t = 0; t < n; ++t) {
                if (unif(rng) < 0.0015) {
                    const double step = (unif(rng) < 0.5 ? -0.05 : 0.05);
                    offset = std::clamp(offset + step, -0.1, 0.1);
                }
                x[t] = base + offset + 0.003 * gauss(rng);
            }
            break;
        }
    }

}

}  // namespace detail

// Generate (train, test) streams.  The train stream is all-normal; attacks are
// injected into the test stream and labeled exactly on their segments.
inline SynthResult synth_generate(const SynthConfig& config, std::uint64_t seed) {
    if (config.subsystems.empty()) throw InputError("synth config has no subsystems");
    if (config.train_rows < 2 || config.test_rows < 2)
        throw InputError("synth config: train/test rows must be >= 2");

    // reject overlapping attacks on the same subsystem before generating
    for (std::size_t i = 0; i < config.attacks.size(); ++i) {
        const auto& a = config.attacks[i];
        if (a.onset < 1 || a.duration < 1 || a.onset + a.duration > config.test_rows)
            throw InputError("attack segment out of range: onset " + std::to_string(a.onset) +
                             " duration " + std::to_string(a.duration));
        if (a.target == Subsystem::P4)
            throw InputError("attacks on P4 are not labelable (no attack_P4 column)");
        for (std::size_t j = i + 1; j < config.attacks.size(); ++j) {
            const auto& b = config.attacks[j];
            if (a.target != b.target) continue;
            if (a.onset < b.onset + b.duration && b.onset < a.onset + a.duration)
                throw InputError("overlapping attacks on subsystem " +
                                 std::string(to_string(a.target)));
        }
    }

    SynthResult out;
    auto& schema = out.schema;
    std::vector<const SubsystemSpec*> col_spec;
    for (const auto& sub : config.subsystems) {
        if (sub.channels < 1) throw InputError("subsystem spec with no channels");
        for (int c = 0; c < sub.channels; ++c) {
            schema.columns.push_back(
                {std::string(to_string(sub.id)) + "_C" + std::to_string(schema.columns.size()),
                 sub.id});
            col_spec.push_back(&sub);
        }
    }
    schema.label_columns = {"attack", "attack_P1", "attack_P2", "attack_P3"};
    const int d = schema.dim();

    auto generate_stream = [&](std::int64_t rows, std::uint64_t tag, int file_id) {
        TimeSeries ts;
        ts.file_id = file_id;
        ts.values.resize(rows, d);
        ts.labels = MatU8::Zero(rows, 4);
        ts.timestamps.resize(static_cast<std::size_t>(rows));
        for (std::int64_t t = 0; t < rows; ++t) ts.timestamps[static_cast<std::size_t>(t)] = t;
        std::vector<double> col(static_cast<std::size_t>(rows));
        for (int c = 0; c < d; ++c) {
            std::mt19937_64 rng(derive_seed(seed, "synth-channel", (tag << 32) | unsigned(c)));
            detail::generate_channel(col, col_spec[c]->dynamics, rng);
            for (std::int64_t t = 0; t < rows; ++t) ts.values(t, c) = col[static_cast<std::size_t>(t)];
        }

        // benign common-mode transients per subsystem group
        int col0 = 0;
        std::uint64_t spec_idx = 0;
        for (const auto& sub : config.subsystems) {
            if (sub.burst_rate > 0.0) {
                VecD sig(sub.channels);
                for (int c = 0; c < sub.channels; ++c) {
                    const auto v = ts.values.col(col0 + c);
                    sig[c] = std::sqrt((v.array() - v.mean()).square().mean());
                }
                std::mt19937_64 rng(derive_seed(seed, "synth-burst", (tag << 32) | spec_idx));
                std::uniform_real_distribution<double> unif(0.0, 1.0);
                for (std::int64_t t = 1; t < rows; ++t) {
                    if (unif(rng) >= sub.burst_rate) continue;
                    for (int i = 0; i < sub.burst_len && t + i < rows; ++i)
                        for (int c = 0; c < sub.channels; ++c)
                            ts.values(t + i, col0 + c) +=
                                sub.burst_amp * sig[c] * std::sin(2.0 * M_PI * i / 4.0);
                    t += sub.burst_len;
                }
            }
            col0 += sub.channels;
            ++spec_idx;
        }
        return ts;
    };

    out.train = generate_stream(config.train_rows, 0, 0);
    out.test = generate_stream(config.test_rows, 1, 1);

    // attack response scaled by each channel's natural variability
    VecD sigma(d);
    for (int c = 0; c < d; ++c) {
        const double mean = out.train.values.col(c).mean();
        sigma[c] = std::sqrt((out.train.values.col(c).array() - mean).square().mean());
    }

    for (const auto& a : config.attacks) {
        const auto cols = schema.subsystem_columns(a.target);
        const int label_col = 1 + static_cast<int>(a.target);  // attack_P1..P3
        for (std::int64_t t = a.onset; t < a.onset + a.duration; ++t) {
            out.test.labels(t, 0) = 1;
            out.test.labels(t, label_col) = 1;
        }
        for (int c : cols) {
            const double s = std::max(sigma[c], 1e-6);
            switch (a.type) {
                case AttackType::SetpointShift:
                    // step at onset plus actuator-hunting ripple
                    for (std::int64_t t = a.onset; t < a.onset + a.duration; ++t)
                        out.test.values(t, c) +=
                            a.magnitude * s *
                            (1.0 + 0.25 * std::sin(2.0 * M_PI * double(t - a.onset) / a.period));
                    break;
                case AttackType::StuckSensor:
                    for (std::int64_t t = a.onset; t < a.onset + a.duration; ++t)
                        out.test.values(t, c) = out.test.values(a.onset - 1, c);
                    break;
                case AttackType::OscillationInjection:
                    for (std::int64_t t = a.onset; t < a.onset + a.duration; ++t)
                        out.test.values(t, c) +=
                            a.magnitude * s * std::cos(2.0 * M_PI * double(t - a.onset) / a.period);
                    break;
            }
        }
        if (a.couple_magnitude > 0.0) {
            for (int c : schema.subsystem_columns(a.couple_target)) {
                const double s = std::max(sigma[c], 1e-6);
                for (std::int64_t t = a.onset; t < a.onset + a.duration; ++t)
                    out.test.values(t, c) += a.couple_magnitude * s *
                                             std::sin(2.0 * M_PI * double(t - a.onset) /
                                                      a.couple_period);
            }
        }
    }
    return out;
}

// Mean |delta| / sigma per channel; the generator contract is that fast
// channels exceed slow ones by >= 10x on this measure.
inline double mean_delta_over_sigma(const TimeSeries& ts, int col) {
    const auto n = ts.rows();
    if (n < 2) return 0.0;
    const double mean = ts.values.col(col).mean();
    const double sigma = std::sqrt((ts.values.col(col).array() - mean).square().mean());
    if (sigma < kDegenerateStd) return 0.0;
    double acc = 0.0;
    for (std::int64_t t = 1; t < n; ++t)
        acc += std::abs(ts.values(t, col) - ts.values(t - 1, col));
    return acc / (static_cast<double>(n - 1) * sigma);
}

}  // namespace snncl
