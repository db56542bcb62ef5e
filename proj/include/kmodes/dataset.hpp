#ifndef KMODES_DATASET_HPP
#define KMODES_DATASET_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rng.hpp"

/**
 * @file dataset.hpp
 *
 * @brief Ingestion of delimited categorical data.
 *
 * Categories within a column are encoded as dense integer codes in order of
 * first appearance in the input. That order defines the category comparator
 * used by all downstream tie-breaking rules: a category with a smaller code
 * has lower rank. Re-encoding the same bytes therefore always reproduces the
 * same codes, and clusterings are deterministic given the input file.
 */

namespace kmodes {

struct DroppedColumn {
    enum class Reason { missing, constant };
    std::string name;
    Reason reason;
};

inline const char* to_string(DroppedColumn::Reason r) {
    return r == DroppedColumn::Reason::missing ? "missing" : "constant";
}

struct ParseOptions {
    char delimiter = ',';
    /// Column to treat as the true-class label: a header name or a 0-based index.
    std::optional<std::string> label_column;
    std::string missing_token = "?";
    bool has_header = false;
    /// Drop rows containing the missing token instead of dropping whole columns.
    bool drop_missing_rows = false;
};

/**
 * @brief Immutable column-encoded categorical matrix.
 *
 * Immutable after construction, so a single instance can be shared read-only
 * across concurrently running clustering jobs.
 */
class Dataset {
public:
    /// Direct construction from pre-encoded codes. `categories[c]` lists the
    /// category names of column `c` in rank order; codes must be in range.
    Dataset(std::int32_t n,
            std::vector<std::vector<std::string>> categories,
            std::vector<std::int32_t> codes,
            std::vector<std::string> column_names = {},
            std::vector<DroppedColumn> dropped = {},
            std::optional<std::vector<std::int32_t>> labels = {},
            std::vector<std::string> label_names = {})
        : n_(n),
          p_(static_cast<std::int32_t>(categories.size())),
          codes_(std::move(codes)),
          categories_(std::move(categories)),
          column_names_(std::move(column_names)),
          dropped_(std::move(dropped)),
          labels_(std::move(labels)),
          label_names_(std::move(label_names)) {
        if (codes_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(p_)) {
            throw std::invalid_argument("dataset: codes size does not match n*p");
        }
        if (column_names_.empty()) {
            for (std::int32_t j = 0; j < p_; ++j) column_names_.push_back(std::to_string(j));
        }
        for (std::int32_t i = 0; i < n_; ++i) {
            for (std::int32_t j = 0; j < p_; ++j) {
                const auto c = code(i, j);
                if (c < 0 || c >= category_count(j)) {
                    throw std::invalid_argument("dataset: code out of range at row " + std::to_string(i));
                }
            }
        }
    }

    std::int32_t n() const { return n_; }
    std::int32_t p() const { return p_; }

    std::int32_t code(std::int32_t row, std::int32_t col) const {
        return codes_[static_cast<std::size_t>(row) * p_ + col];
    }

    std::span<const std::int32_t> row(std::int32_t i) const {
        return {codes_.data() + static_cast<std::size_t>(i) * p_, static_cast<std::size_t>(p_)};
    }

    std::int32_t category_count(std::int32_t col) const {
        return static_cast<std::int32_t>(categories_[static_cast<std::size_t>(col)].size());
    }

    const std::string& category_name(std::int32_t col, std::int32_t code) const {
        return categories_[static_cast<std::size_t>(col)][static_cast<std::size_t>(code)];
    }

    const std::vector<std::vector<std::string>>& categories() const { return categories_; }
    const std::vector<std::string>& column_names() const { return column_names_; }
    const std::vector<DroppedColumn>& dropped_columns() const { return dropped_; }

    bool has_labels() const { return labels_.has_value(); }
    const std::vector<std::int32_t>& labels() const { return *labels_; }
    const std::vector<std::string>& label_names() const { return label_names_; }

    /// Indices of the first occurrence of each distinct row, in row order.
    std::vector<std::int32_t> distinct_row_indices() const {
        std::vector<std::int32_t> reps;
        std::unordered_map<std::string, bool> seen;
        std::string key;
        for (std::int32_t i = 0; i < n_; ++i) {
            key.clear();
            for (const auto c : row(i)) {
                key.append(reinterpret_cast<const char*>(&c), sizeof(c));
            }
            if (seen.emplace(key, true).second) reps.push_back(i);
        }
        return reps;
    }

private:
    std::int32_t n_, p_;
    std::vector<std::int32_t> codes_;
    std::vector<std::vector<std::string>> categories_;
    std::vector<std::string> column_names_;
    std::vector<DroppedColumn> dropped_;
    std::optional<std::vector<std::int32_t>> labels_;
    std::vector<std::string> label_names_;
};

namespace dataset_internal {

inline std::vector<std::string> split_line(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == delim) {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string_view line = text.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!(i == text.size() && line.empty())) lines.push_back(line);
            start = i + 1;
        }
    }
    // A trailing blank line (or several) is tolerated.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}

/**
 * Parses a delimited categorical table.
 *
 * Preprocessing, in order: the label column (if named) is extracted from the
 * features; columns containing the missing token are recorded and removed
 * (or rows are removed, under `drop_missing_rows`); constant columns are
 * recorded and removed. Categories are coded in first-appearance order.
 *
 * Throws `std::runtime_error` on ragged rows (message carries the 1-based
 * row number) and when preprocessing leaves no feature columns.
 */
inline Dataset parse_delimited(std::string_view text, const ParseOptions& opts = {}) {
    using dataset_internal::split_line;
    using dataset_internal::split_lines;

    const auto lines = split_lines(text);
    if (lines.empty()) throw std::runtime_error("parse error: empty input");

    std::vector<std::string> header;
    std::size_t first_data_line = 0;
    if (opts.has_header) {
        header = split_line(lines[0], opts.delimiter);
        first_data_line = 1;
    }

    std::vector<std::vector<std::string>> cells;
    cells.reserve(lines.size() - first_data_line);
    std::size_t width = opts.has_header ? header.size() : 0;
    for (std::size_t li = first_data_line; li < lines.size(); ++li) {
        auto fields = split_line(lines[li], opts.delimiter);
        if (cells.empty() && !opts.has_header) width = fields.size();
        if (fields.size() != width) {
            throw std::runtime_error("parse error: ragged row " + std::to_string(li + 1) +
                                     " has " + std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(width));
        }
        cells.push_back(std::move(fields));
    }
    if (cells.empty()) throw std::runtime_error("parse error: no data rows");
    if (width < 2) throw std::runtime_error("parse error: need at least 2 columns");

    if (!opts.has_header) {
        for (std::size_t j = 0; j < width; ++j) header.push_back(std::to_string(j));
    }

    // Resolve the label column: exact header-name match first, then a 0-based index.
    std::optional<std::size_t> label_idx;
    if (opts.label_column) {
        for (std::size_t j = 0; j < width; ++j) {
            if (header[j] == *opts.label_column) { label_idx = j; break; }
        }
        if (!label_idx) {
            try {
                const long v = std::stol(*opts.label_column);
                if (v >= 0 && static_cast<std::size_t>(v) < width) label_idx = static_cast<std::size_t>(v);
            } catch (...) {
            }
        }
        if (!label_idx) {
            throw std::runtime_error("parse error: label column '" + *opts.label_column + "' not found");
        }
    }

    std::vector<std::size_t> feature_cols;
    for (std::size_t j = 0; j < width; ++j) {
        if (!label_idx || j != *label_idx) feature_cols.push_back(j);
    }

    // Missing-value handling.
    std::vector<DroppedColumn> dropped;
    if (opts.drop_missing_rows) {
        std::vector<std::vector<std::string>> kept;
        kept.reserve(cells.size());
        for (auto& r : cells) {
            bool missing = false;
            for (const auto j : feature_cols) {
                if (r[j] == opts.missing_token) { missing = true; break; }
            }
            if (!missing) kept.push_back(std::move(r));
        }
        cells = std::move(kept);
        if (cells.empty()) throw std::runtime_error("parse error: all rows dropped as missing");
    } else {
        std::vector<std::size_t> kept_cols;
        for (const auto j : feature_cols) {
            bool missing = false;
            for (const auto& r : cells) {
                if (r[j] == opts.missing_token) { missing = true; break; }
            }
            if (missing) {
                dropped.push_back({header[j], DroppedColumn::Reason::missing});
            } else {
                kept_cols.push_back(j);
            }
        }
        feature_cols = std::move(kept_cols);
    }

    // Constant columns carry no clustering information and are removed.
    {
        std::vector<std::size_t> kept_cols;
        for (const auto j : feature_cols) {
            bool constant = true;
            for (const auto& r : cells) {
                if (r[j] != cells[0][j]) { constant = false; break; }
            }
            if (constant) {
                dropped.push_back({header[j], DroppedColumn::Reason::constant});
            } else {
                kept_cols.push_back(j);
            }
        }
        feature_cols = std::move(kept_cols);
    }

    if (feature_cols.empty()) {
        throw std::runtime_error("parse error: no feature columns left after preprocessing");
    }

    const auto n = static_cast<std::int32_t>(cells.size());
    const auto p = static_cast<std::int32_t>(feature_cols.size());

    std::vector<std::vector<std::string>> categories(static_cast<std::size_t>(p));
    std::vector<std::unordered_map<std::string, std::int32_t>> codebook(static_cast<std::size_t>(p));
    std::vector<std::int32_t> codes(static_cast<std::size_t>(n) * static_cast<std::size_t>(p));
    std::vector<std::string> column_names;
    for (const auto j : feature_cols) column_names.push_back(header[j]);

    for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t jj = 0; jj < p; ++jj) {
            const auto& cell = cells[static_cast<std::size_t>(i)][feature_cols[static_cast<std::size_t>(jj)]];
            auto& book = codebook[static_cast<std::size_t>(jj)];
            auto it = book.find(cell);
            if (it == book.end()) {
                const auto next_code = static_cast<std::int32_t>(categories[static_cast<std::size_t>(jj)].size());
                it = book.emplace(cell, next_code).first;
                categories[static_cast<std::size_t>(jj)].push_back(cell);
            }
            codes[static_cast<std::size_t>(i) * p + jj] = it->second;
        }
    }

    std::optional<std::vector<std::int32_t>> labels;
    std::vector<std::string> label_names;
    if (label_idx) {
        std::vector<std::int32_t> lab(static_cast<std::size_t>(n));
        std::unordered_map<std::string, std::int32_t> book;
        for (std::int32_t i = 0; i < n; ++i) {
            const auto& cell = cells[static_cast<std::size_t>(i)][*label_idx];
            auto it = book.find(cell);
            if (it == book.end()) {
                it = book.emplace(cell, static_cast<std::int32_t>(label_names.size())).first;
                label_names.push_back(cell);
            }
            lab[static_cast<std::size_t>(i)] = it->second;
        }
        labels = std::move(lab);
    }

    return Dataset(n, std::move(categories), std::move(codes), std::move(column_names),
                   std::move(dropped), std::move(labels), std::move(label_names));
}

/// Uniform random visiting order for the observations. The dataset itself is
/// not modified; callers apply the permutation while iterating.
inline std::vector<std::int32_t> shuffle_order(const Dataset& ds, Rng& rng) {
    return random_permutation(ds.n(), rng);
}

}

#endif
