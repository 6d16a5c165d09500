#pragma once

#include "pgsim/correlations.hpp"
#include "pgsim/ctf.hpp"
#include "pgsim/gaussian.hpp"
#include "pgsim/marginals.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace pgsim {

using Json = nlohmann::ordered_json;

/// {"family": "...", "params": [...], "p0": x}; p0 present only for mixed marginals.
Json to_json(const Marginal& m);
Marginal marginal_from_json(const Json& j);

/// {"family": "...", "params": [...]}
Json to_json(const CorrelationModel& c);
CorrelationModel correlation_from_json(const Json& j);

/// {"family", "b", "c", "rho_max"?, "residual_rms", "warning"?}
Json to_json(const CtfCurve& c);
CtfCurve ctf_curve_from_json(const Json& j);

Json to_json(const TransformGrid& g);

Json to_json(const ArModel& m);
ArModel ar_model_from_json(const Json& j);

Json to_json(const SumAr1Model& m);
SumAr1Model sum_ar1_from_json(const Json& j);

/// Matrices are arrays of rows.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json to_json(const Mar1Model& m);
Mar1Model mar1_from_json(const Json& j);

/// Column-oriented table of labelled series.
struct SeriesTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    const std::vector<double>& column(const std::string& name) const;
};

/// Header row of names, then one row per time step; values in shortest round-trip form.
void write_series_csv(std::ostream& out, const SeriesTable& table);

/// Parses the format above. Throws Parse on ragged rows or non-numeric cells.
SeriesTable read_series_csv(std::istream& in);
SeriesTable read_series_csv_file(const std::string& path);

Json read_json_file(const std::string& path);

}  // namespace pgsim
