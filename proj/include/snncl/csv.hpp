#pragma once

#include <snncl/common.hpp>
#include <snncl/schema.hpp>
#include <snncl/timeseries.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace snncl {

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
    if (b == e) return false;
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

}  // namespace detail

inline std::vector<std::string> read_csv_header(const std::string& path, char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open CSV file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
    return detail::split_line(line, delimiter);
}

// Load a HAI-format CSV against a schema.  The header must contain every
// schema column; rows with unparseable sensor cells are dropped (counted in
// rejected_rows); non-binary label values abort with the offending row index.
inline TimeSeries load_csv(const std::string& path, const SensorSchema& schema,
                           char delimiter = ',', int file_id = 0) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
    const auto header = detail::split_line(line, delimiter);

    auto find_col = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };

    std::vector<int> data_idx(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        data_idx[c] = find_col(schema.columns[c].name);
        if (data_idx[c] < 0)
            throw SchemaError("missing column '" + schema.columns[c].name + "' in " + path);
    }
    std::vector<int> label_idx(schema.label_columns.size());
    for (std::size_t c = 0; c < schema.label_columns.size(); ++c) {
        label_idx[c] = find_col(schema.label_columns[c]);
        if (label_idx[c] < 0)
            throw SchemaError("missing label column '" + schema.label_columns[c] + "' in " + path);
    }
    int time_idx = find_col("time");
    if (time_idx < 0) time_idx = find_col("timestamp");

    const int d = static_cast<int>(schema.columns.size());
    const int nl = static_cast<int>(schema.label_columns.size());

    std::vector<double> values;
    std::vector<std::uint8_t> labels;
    std::string prev_time;
    std::size_t rejected = 0;
    std::int64_t row_index = 0;  // 1-based data row numbering for messages

    std::vector<double> row_vals(static_cast<std::size_t>(d));
    std::vector<std::uint8_t> row_labels(static_cast<std::size_t>(nl));

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row_index;
        const auto cells = detail::split_line(line, delimiter);

        // labels first: a malformed label is a hard error, not a rejected row
        bool ok = true;
        for (int c = 0; c < nl; ++c) {
            if (label_idx[c] >= static_cast<int>(cells.size()))
                throw DataError("row " + std::to_string(row_index) + ": too few cells in " + path);
            double v;
            if (!detail::parse_double(cells[label_idx[c]], v))
                throw DataError("row " + std::to_string(row_index) + ": label '" +
                                schema.label_columns[c] + "' is not numeric");
            if (v != 0.0 && v != 1.0)
                throw DataError("row " + std::to_string(row_index) + ": label '" +
                                schema.label_columns[c] + "' = " + cells[label_idx[c]] +
                                " is not binary");
            row_labels[c] = static_cast<std::uint8_t>(v);
        }
        for (int c = 0; c < d; ++c) {
            if (data_idx[c] >= static_cast<int>(cells.size()) ||
                !detail::parse_double(cells[data_idx[c]], row_vals[c])) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            ++rejected;
            continue;
        }
        if (time_idx >= 0 && time_idx < static_cast<int>(cells.size())) {
            // ordering check only; HAI timestamps are lexicographically sortable
            if (!prev_time.empty() && cells[time_idx] < prev_time)
                throw DataError("row " + std::to_string(row_index) +
                                ": time column not in increasing order");
            prev_time = cells[time_idx];
        }
        values.insert(values.end(), row_vals.begin(), row_vals.end());
        labels.insert(labels.end(), row_labels.begin(), row_labels.end());
    }

    const std::int64_t n = static_cast<std::int64_t>(values.size()) / d;
    if (n == 0) throw DataError("no usable rows in " + path);

    TimeSeries ts;
    ts.file_id = file_id;
    ts.values = Eigen::Map<MatD>(values.data(), n, d);
    ts.labels = Eigen::Map<MatU8>(labels.data(), n, nl);
    ts.rejected_rows = rejected;
    ts.timestamps.resize(static_cast<std::size_t>(n));
    const auto period = static_cast<std::int64_t>(schema.sample_period);
    for (std::int64_t i = 0; i < n; ++i)
        ts.timestamps[static_cast<std::size_t>(i)] = i * (period > 0 ? period : 1);
    return ts;
}

inline void write_csv(const std::string& path, const TimeSeries& series,
                      const SensorSchema& schema) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write CSV file: " + path);
    out << "time";
    for (const auto& c : schema.columns) out << ',' << c.name;
    for (const auto& l : schema.label_columns) out << ',' << l;
    out << '\n';
    out.precision(9);
    for (std::int64_t r = 0; r < series.rows(); ++r) {
        out << series.timestamps[static_cast<std::size_t>(r)];
        for (int c = 0; c < series.dim(); ++c) out << ',' << series.values(r, c);
        for (int c = 0; c < series.labels.cols(); ++c)
            out << ',' << static_cast<int>(series.labels(r, c));
        out << '\n';
    }
}

}  // namespace snncl
