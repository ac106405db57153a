#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "error.hpp"
#include "eval.hpp"
#include "random.hpp"

namespace hashsimp {

struct Dataset {
    Matrix X;
    Vector y;
    std::vector<std::string> feature_names;
    std::string target_name;
    std::size_t dropped_rows = 0; // rows rejected for non-finite values

    [[nodiscard]] std::size_t samples() const { return y.size(); }
    [[nodiscard]] std::size_t features() const { return X.cols(); }
};

namespace detail {

    inline std::string_view trim(std::string_view s)
    {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
            s.remove_prefix(1);
        }
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
            s.remove_suffix(1);
        }
        return s;
    }

    inline std::vector<std::string_view> split_fields(std::string_view line)
    {
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        return fields;
    }

    inline std::optional<double> parse_double(std::string_view field)
    {
        if (!field.empty() && field.front() == '+') {
            field.remove_prefix(1);
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
            return std::nullopt;
        }
        return value;
    }

} // namespace detail

// Header row required. The target column becomes y; every other column is a
// feature, addressed as x_j in header order. Empty target name = last column.
inline Dataset load_csv(const std::filesystem::path& path, const std::string& target = {})
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || detail::trim(line).empty()) {
        throw DataError("dataset " + path.string() + " is empty");
    }
    std::vector<std::string> header;
    for (auto field : detail::split_fields(line)) {
        header.emplace_back(field);
    }
    std::size_t target_col = header.size() - 1;
    if (!target.empty()) {
        std::size_t j = 0;
        while (j < header.size() && header[j] != target) {
            ++j;
        }
        if (j == header.size()) {
            throw DataError("target column '" + target + "' not found in " + path.string());
        }
        target_col = j;
    }
    if (header.size() < 2) {
        throw DataError("dataset needs at least one feature column and a target column");
    }

    Dataset ds;
    ds.target_name = header[target_col];
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j != target_col) {
            ds.feature_names.emplace_back(header[j]);
        }
    }

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto fields = detail::split_fields(line);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        std::vector<double> row(fields.size());
        bool finite = true;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto value = detail::parse_double(fields[j]);
            if (!value) {
                throw DataError("line " + std::to_string(line_no) + ", column '" + header[j] + "': non-numeric value '" + std::string(fields[j]) + "'");
            }
            row[j] = *value;
            finite = finite && std::isfinite(*value);
        }
        if (!finite) {
            ++ds.dropped_rows;
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw DataError("dataset " + path.string() + " has no usable rows");
    }

    ds.X = Matrix(rows.size(), header.size() - 1);
    ds.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t col = 0;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j == target_col) {
                ds.y[i] = rows[i][j];
            } else {
                ds.X.at(i, col++) = rows[i][j];
            }
        }
    }
    return ds;
}

struct Splits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// Seeded shuffle, then train floor(n/2), validation floor(n/4), test the rest.
inline Splits split(std::size_t n, std::uint64_t seed)
{
    if (n < 4) {
        throw DataError("need at least 4 samples to split, got " + std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.index(i + 1)]);
    }
    const std::size_t n_train = n / 2;
    const std::size_t n_val = n / 4;
    Splits s;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    return s;
}

inline Splits split(const Dataset& dataset, std::uint64_t seed) { return split(dataset.samples(), seed); }

struct Partition {
    Matrix X;
    Vector y;
};

struct PartitionedData {
    Partition train;
    Partition validation;
    Partition test;
};

inline Partition select(const Dataset& dataset, std::span<const std::size_t> rows)
{
    Partition part{dataset.X.select_rows(rows), Vector(rows.size())};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        part.y[i] = dataset.y[rows[i]];
    }
    return part;
}

inline PartitionedData partition(const Dataset& dataset, const Splits& splits)
{
    return {select(dataset, splits.train), select(dataset, splits.validation), select(dataset, splits.test)};
}

} // namespace hashsimp
