#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyper_rc/error.hpp"

namespace hyper_rc {

// Uniformly sampled multivariate series, one row per sample.
struct Trajectory {
    Eigen::MatrixXd data;
    double dt = 1.0;
    std::string name;
    std::optional<double> lyapunov_max; // 1 / model time unit
    std::vector<std::string> columns;

    Eigen::Index rows() const noexcept { return data.rows(); }
    Eigen::Index dim() const noexcept { return data.cols(); }

    // Column names, defaulting to x0, x1, ...
    std::vector<std::string> column_names() const
    {
        if (static_cast<Eigen::Index>(columns.size()) == dim()) {
            return columns;
        }
        std::vector<std::string> out;
        for (Eigen::Index k = 0; k < dim(); ++k) {
            out.push_back("x" + std::to_string(k));
        }
        return out;
    }

    // Rows [begin, begin + count) with all metadata carried over.
    Trajectory slice(Eigen::Index begin, Eigen::Index count) const
    {
        if (begin < 0 || count < 0 || begin + count > rows()) {
            throw DimensionError("Trajectory::slice: range out of bounds");
        }
        Trajectory out = *this;
        out.data = data.middleRows(begin, count);
        return out;
    }

    void validate() const
    {
        if (data.rows() < 2) {
            throw DimensionError("Trajectory '" + name + "': need at least 2 rows");
        }
        if (!(dt > 0.0)) {
            throw ConfigError("Trajectory '" + name + "': dt must be positive");
        }
        if (!data.allFinite()) {
            throw DomainError("Trajectory '" + name + "': non-finite values");
        }
    }
};

} // namespace hyper_rc
