#pragma once

#include <snncl/common.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <string>
#include <vector>

namespace snncl {

enum class Subsystem { P1, P2, P3, P4 };

inline const char* to_string(Subsystem s) {
    switch (s) {
        case Subsystem::P1: return "P1";
        case Subsystem::P2: return "P2";
        case Subsystem::P3: return "P3";
        case Subsystem::P4: return "P4";
    }
    return "?";
}

inline Subsystem subsystem_from_string(const std::string& s) {
    if (s == "P1") return Subsystem::P1;
    if (s == "P2") return Subsystem::P2;
    if (s == "P3") return Subsystem::P3;
    if (s == "P4") return Subsystem::P4;
    throw SchemaError("unknown subsystem '" + s + "' (expected P1..P4)");
}

// Column layout of a sensor stream: every data column belongs to exactly one
// subsystem; label columns are binary attack flags.
struct SensorSchema {
    struct Column {
        std::string name;
        Subsystem subsystem;
    };

    std::vector<Column> columns;
    std::vector<std::string> label_columns;  // e.g. attack, attack_P1, attack_P2, attack_P3
    double sample_period = 1.0;              // seconds

    int dim() const { return static_cast<int>(columns.size()); }

    int label_index(const std::string& name) const {
        auto it = std::find(label_columns.begin(), label_columns.end(), name);
        if (it == label_columns.end())
            throw SchemaError("label column '" + name + "' not in schema");
        return static_cast<int>(it - label_columns.begin());
    }

    std::vector<int> subsystem_columns(Subsystem s) const {
        std::vector<int> idx;
        for (int i = 0; i < dim(); ++i)
            if (columns[i].subsystem == s) idx.push_back(i);
        return idx;
    }

    nlohmann::json to_json() const {
        nlohmann::json cols = nlohmann::json::array();
        for (const auto& c : columns)
            cols.push_back({{"name", c.name}, {"subsystem", to_string(c.subsystem)}});
        return {{"columns", cols},
                {"label_columns", label_columns},
                {"sample_period", sample_period}};
    }

    static SensorSchema from_json(const nlohmann::json& j) {
        SensorSchema s;
        for (const auto& c : j.at("columns"))
            s.columns.push_back({c.at("name").get<std::string>(),
                                 subsystem_from_string(c.at("subsystem").get<std::string>())});
        s.label_columns = j.at("label_columns").get<std::vector<std::string>>();
        s.sample_period = j.value("sample_period", 1.0);
        if (s.columns.empty()) throw SchemaError("schema has no data columns");
        if (s.label_columns.empty()) throw SchemaError("schema has no label columns");
        return s;
    }

    static SensorSchema load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open schema file: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

    // Infer a schema from a CSV header: columns named P<k>_* map to subsystem
    // P<k>, attack* columns become labels, time/timestamp columns are skipped.
    static SensorSchema infer_from_header(const std::vector<std::string>& names) {
        SensorSchema s;
        for (const auto& n : names) {
            std::string lower = n;
            std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
            if (lower == "time" || lower == "timestamp") continue;
            if (lower.rfind("attack", 0) == 0) {
                s.label_columns.push_back(n);
                continue;
            }
            if (n.size() >= 3 && n[0] == 'P' && n[2] == '_' && n[1] >= '1' && n[1] <= '4') {
                s.columns.push_back({n, static_cast<Subsystem>(n[1] - '1')});
                continue;
            }
            throw SchemaError("cannot infer subsystem for column '" + n +
                              "'; provide an explicit schema file");
        }
        if (s.columns.empty()) throw SchemaError("no data columns inferred from header");
        if (s.label_columns.empty()) throw SchemaError("no attack label columns found in header");
        return s;
    }
};

}  // namespace snncl
