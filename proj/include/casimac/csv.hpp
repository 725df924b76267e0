#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "casimac/dataset.hpp"
#include "casimac/error.hpp"

/**
 * @file csv.hpp
 *
 * Comma-separated tables with a mandatory header row. Lines starting with '#' and
 * blank lines are skipped, so files written by the CLI (which start with a metadata
 * comment) can be read back directly. Double-quoted fields may contain commas.
 */

namespace casimac {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based line number of each row in the source text.
    std::vector<std::size_t> line_numbers;

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) {
                return j;
            }
        }
        return std::nullopt;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) {
        throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = detail::trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        auto fields = detail::split_csv_line(view, line_no);
        for (auto& f : fields) {
            f = std::string(detail::trim(f));
        }
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) {
        throw DataError("CSV input has no header row");
    }
    return table;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return parse_csv(in);
}

inline double parse_number(const std::string& text, std::size_t line_no, const std::string& column) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc{} || ptr != last) {
        throw DataError("line " + std::to_string(line_no) + ", column '" + column + "': '" + text + "' is not a number");
    }
    return v;
}

/// Numeric features in the given column order plus the raw label column (if present).
struct FeatureTable {
    FeatureMatrix features;
    std::vector<std::string> feature_names;
    std::optional<std::vector<std::string>> raw_labels;
};

/**
 * Extract features from @p table. Without @p feature_order every column except the
 * label column is a feature; otherwise exactly those columns are used in that order.
 */
inline FeatureTable extract_features(const CsvTable& table, const std::string& label_column,
                                     const std::vector<std::string>* feature_order = nullptr) {
    FeatureTable out;
    const auto label_idx = label_column.empty() ? std::nullopt : table.column(label_column);
    std::vector<std::size_t> cols;
    if (feature_order != nullptr) {
        for (const auto& name : *feature_order) {
            const auto c = table.column(name);
            if (!c) {
                throw DataError("missing feature column '" + name + "'");
            }
            cols.push_back(*c);
        }
        out.feature_names = *feature_order;
    } else {
        for (std::size_t j = 0; j < table.header.size(); ++j) {
            if (!label_idx || j != *label_idx) {
                cols.push_back(j);
                out.feature_names.push_back(table.header[j]);
            }
        }
    }
    out.features.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_number(table.rows[i][cols[j]], table.line_numbers[i], table.header[cols[j]]);
        }
    }
    if (label_idx) {
        std::vector<std::string> labels;
        labels.reserve(table.rows.size());
        for (const auto& row : table.rows) {
            labels.push_back(row[*label_idx]);
        }
        out.raw_labels = std::move(labels);
    }
    return out;
}

/// Labels are remapped to 0..n-1 in order of first appearance.
inline LabeledData labeled_from_table(const CsvTable& table, const std::string& label_column) {
    if (!table.column(label_column)) {
        throw DataError("missing label column '" + label_column + "'");
    }
    FeatureTable ft = extract_features(table, label_column);
    for (const auto& l : *ft.raw_labels) {
        if (l.empty()) {
            throw DataError("empty class label in column '" + label_column + "'");
        }
    }
    auto [idx, names] = encode_labels(*ft.raw_labels);
    LabeledData data{std::move(ft.features), std::move(idx), std::move(names), std::move(ft.feature_names)};
    if (data.size() == 0) {
        throw DataError("CSV input has no data rows");
    }
    return data;
}

inline LabeledData load_csv(const std::string& path, const std::string& label_column) {
    return labeled_from_table(read_csv(path), label_column);
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string quote_csv(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';
    }
    return out + "\"";
}

/// Write features followed by a label column; @p comment lines are prefixed with "# ".
inline void write_csv(std::ostream& out, const LabeledData& data, const std::string& label_column = "label",
                      const std::vector<std::string>& comment = {}) {
    for (const auto& c : comment) {
        out << "# " << c << '\n';
    }
    for (const auto& name : data.feature_names) {
        out << quote_csv(name) << ',';
    }
    out << quote_csv(label_column) << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
            out << format_number(data.features(static_cast<Eigen::Index>(i), j)) << ',';
        }
        out << quote_csv(data.class_names[data.labels[i]]) << '\n';
    }
}

inline void save_csv(const std::string& path, const LabeledData& data, const std::string& label_column = "label",
                     const std::vector<std::string>& comment = {}) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    write_csv(out, data, label_column, comment);
}

}  // namespace casimac
