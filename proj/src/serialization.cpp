#include "pgsim/serialization.hpp"

#include "pgsim/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pgsim {

namespace {

template <class T>
T get(const Json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) fail(ErrorCode::Parse, what + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, what + ": field '" + key + "' has the wrong type");
    }
}

}  // namespace

Json to_json(const Marginal& m) {
    Json j;
    if (const auto* mm = std::get_if<MixedMarginal>(&m)) {
        j["family"] = std::string(family_name(mm->continuous().family()));
        const auto p = mm->continuous().params();
        j["params"] = std::vector<double>(p.begin(), p.end());
        j["p0"] = mm->p0();
        return j;
    }
    const auto& d = std::get<MarginalModel>(m);
    j["family"] = std::string(family_name(d.family()));
    j["params"] = std::vector<double>(d.params().begin(), d.params().end());
    return j;
}

Marginal marginal_from_json(const Json& j) {
    const Family family = family_from_name(get<std::string>(j, "family", "marginal"));
    MarginalModel model(family, get<std::vector<double>>(j, "params", "marginal"));
    if (j.contains("p0")) {
        const double p0 = get<double>(j, "p0", "marginal");
        return MixedMarginal(p0, std::move(model));
    }
    return model;
}

Json to_json(const CorrelationModel& c) {
    Json j;
    j["family"] = std::string(acs_family_name(c.family()));
    j["params"] = std::vector<double>(c.params().begin(), c.params().end());
    return j;
}

CorrelationModel correlation_from_json(const Json& j) {
    return CorrelationModel(acs_family_from_name(get<std::string>(j, "family", "correlation")),
                            get<std::vector<double>>(j, "params", "correlation"));
}

Json to_json(const CtfCurve& c) {
    Json j;
    j["family"] = std::string(ctf_family_name(c.family));
    j["b"] = c.b;
    j["c"] = c.c;
    if (c.rho_max) j["rho_max"] = *c.rho_max;
    j["residual_rms"] = c.residual_rms;
    if (!c.warning.empty()) j["warning"] = c.warning;
    return j;
}

CtfCurve ctf_curve_from_json(const Json& j) {
    const CtfFamily family = ctf_family_from_name(get<std::string>(j, "family", "curve"));
    if (family == CtfFamily::Identity) return CtfCurve::identity();
    CtfCurve c = CtfCurve::make(family, get<double>(j, "b", "curve"), get<double>(j, "c", "curve"));
    if (j.contains("residual_rms")) c.residual_rms = get<double>(j, "residual_rms", "curve");
    return c;
}

Json to_json(const TransformGrid& g) {
    Json arr = Json::array();
    for (const auto& p : g.points) arr.push_back({{"rho_z", p.rho_z}, {"rho_x", p.rho_x}});
    return arr;
}

Json to_json(const ArModel& m) {
    return {{"type", "ar"}, {"order", m.order()}, {"coeffs", m.coeffs}, {"noise_var", m.noise_var}};
}

ArModel ar_model_from_json(const Json& j) {
    ArModel m;
    m.coeffs = get<std::vector<double>>(j, "coeffs", "AR model");
    m.noise_var = get<double>(j, "noise_var", "AR model");
    return m;
}

Json to_json(const SumAr1Model& m) {
    Json comps = Json::array();
    for (const auto& c : m.components) comps.push_back({{"rho1", c.rho1}, {"variance", c.variance}});
    return {{"type", "sum_ar1"}, {"components", comps}};
}

SumAr1Model sum_ar1_from_json(const Json& j) {
    SumAr1Model m;
    for (const auto& c : get<Json>(j, "components", "sum-of-AR(1) model")) {
        m.components.push_back({get<double>(c, "rho1", "component"), get<double>(c, "variance", "component")});
    }
    return m;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
        rows.push_back(r);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) fail(ErrorCode::Parse, "matrix must be a non-empty array of rows");
    const auto n = static_cast<Eigen::Index>(j.size());
    const auto m = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd out(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
            fail(ErrorCode::Parse, "matrix rows must all have the same length");
        }
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto& v = row[static_cast<std::size_t>(k)];
            if (!v.is_number()) fail(ErrorCode::Parse, "matrix entries must be numbers");
            out(i, k) = v.get<double>();
        }
    }
    return out;
}

Json to_json(const Mar1Model& m) {
    Json j{{"type", "mar1"}, {"A", matrix_to_json(m.A)}, {"B", matrix_to_json(m.B)}, {"K0", matrix_to_json(m.K0)}};
    if (!m.warning.empty()) j["warning"] = m.warning;
    return j;
}

Mar1Model mar1_from_json(const Json& j) {
    Mar1Model m;
    m.A = matrix_from_json(get<Json>(j, "A", "MAR(1) model"));
    m.B = matrix_from_json(get<Json>(j, "B", "MAR(1) model"));
    m.K0 = matrix_from_json(get<Json>(j, "K0", "MAR(1) model"));
    return m;
}

const std::vector<double>& SeriesTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return columns[i];
    fail(ErrorCode::Input, "series '" + name + "' not found");
}

void write_series_csv(std::ostream& out, const SeriesTable& table) {
    for (std::size_t i = 0; i < table.names.size(); ++i) out << (i ? "," : "") << table.names[i];
    out << '\n';
    char buf[64];
    const std::size_t n = table.rows();
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            if (i) out << ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, table.columns[i][t]);
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

SeriesTable read_series_csv(std::istream& in) {
    SeriesTable table;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::Parse, "series CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream ss(line);
        std::string name;
        while (std::getline(ss, name, ',')) table.names.push_back(name);
    }
    if (table.names.empty()) fail(ErrorCode::Parse, "series CSV has no header");
    table.columns.resize(table.names.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t col = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (true) {
            const char* comma = std::find(p, end, ',');
            if (col >= table.names.size()) {
                fail(ErrorCode::Parse, "series CSV row " + std::to_string(row) + " has too many cells");
            }
            while (p < comma && *p == ' ') ++p;
            double v = 0.0;
            const auto res = std::from_chars(p, comma, v);
            if (res.ec != std::errc() || res.ptr != comma) {
                fail(ErrorCode::Parse, "series CSV row " + std::to_string(row) + ": cell " +
                                           std::to_string(col + 1) + " is not a number");
            }
            table.columns[col++].push_back(v);
            if (comma == end) break;
            p = comma + 1;
        }
        if (col != table.names.size()) {
            fail(ErrorCode::Parse, "series CSV row " + std::to_string(row) + " has too few cells");
        }
    }
    return table;
}

SeriesTable read_series_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::NotFound, "series file not found: " + path);
    return read_series_csv(in);
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::NotFound, "spec not found: " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::Parse, path + ": " + e.what());
    }
}

}  // namespace pgsim
