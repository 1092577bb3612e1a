#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "cml/common.hpp"

namespace cml {

/// Formats doubles so that re-parsing round-trips bit-exactly; output is a
/// pure function of the value, which keeps emitted tables byte-stable.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Column-named table of JSON scalar cells (numbers, strings, bools).
class DataTable {
public:
    explicit DataTable(std::vector<std::string> headers) : headers_(std::move(headers)) {}

    void add_row(std::vector<nlohmann::json> row) {
        if (row.size() != headers_.size()) throw usage_error("table row width mismatch");
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& headers() const { return headers_; }
    std::size_t row_count() const { return rows_.size(); }
    const std::vector<std::vector<nlohmann::json>>& rows() const { return rows_; }

    std::vector<double> numeric_column(const std::string& name) const {
        const std::size_t idx = column_index(name);
        std::vector<double> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) out.push_back(r[idx].get<double>());
        return out;
    }

    std::vector<std::string> string_column(const std::string& name) const {
        const std::size_t idx = column_index(name);
        std::vector<std::string> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) out.push_back(r[idx].get<std::string>());
        return out;
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t i = 0; i < headers_.size(); ++i) {
            if (i) out += ',';
            out += headers_[i];
        }
        out += '\n';
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                out += cell_to_string(r[i]);
            }
            out += '\n';
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows_) {
            nlohmann::json obj;
            for (std::size_t i = 0; i < r.size(); ++i) obj[headers_[i]] = r[i];
            arr.push_back(std::move(obj));
        }
        return arr;
    }

private:
    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < headers_.size(); ++i)
            if (headers_[i] == name) return i;
        throw usage_error("no such column: " + name);
    }

    static std::string cell_to_string(const nlohmann::json& v) {
        if (v.is_number_float()) return format_double(v.get<double>());
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
    }

    std::vector<std::string> headers_;
    std::vector<std::vector<nlohmann::json>> rows_;
};

/// Ordinary least squares y = intercept + slope * x with R^2.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw usage_error("linear_fit: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

}  // namespace cml
