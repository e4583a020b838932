#include "nhqm/io.hpp"

#include "nhqm/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace nhqm {

namespace {

double number(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw ConfigError("'" + key + "' must be finite");
    return x;
}

const json& field(const json& j, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError("missing key '" + key + "'");
    return j.at(key);
}

Matrix matrix_field(const json& j, const std::string& key) {
    return matrix_from_json(field(j, key));
}

}  // namespace

double round12(double x) {
    if (!std::isfinite(x)) return x;
    return std::strtod(format12(x).c_str(), nullptr);
}

std::string format12(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

json complex_to_json(cplx z) { return json::array({round12(z.real()), round12(z.imag())}); }

cplx complex_from_json(const json& j, const std::string& key) {
    if (j.is_number()) return {number(j, key), 0.0};
    if (!j.is_array() || j.size() != 2) throw ConfigError("'" + key + "' must be [re, im]");
    return {number(j[0], key), number(j[1], key)};
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
    return out;
}

Vector vector_from_json(const json& j, const std::string& key) {
    if (!j.is_array()) throw ConfigError("'" + key + "' must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], key);
    return v;
}

json matrix_to_json(const Matrix& m) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json rr = json::array();
        json ri = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            rr.push_back(round12(m(r, c).real()));
            ri.push_back(round12(m(r, c).imag()));
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    return {{"dim", m.rows()}, {"re", re}, {"im", im}};
}

Matrix matrix_from_json(const json& j) {
    const json& d = field(j, "dim");
    if (!d.is_number_integer() || d.get<long long>() < 1) {
        throw ConfigError("'dim' must be a positive integer");
    }
    const auto n = static_cast<Eigen::Index>(d.get<long long>());
    Matrix m = Matrix::Zero(n, n);
    auto fill = [&](const std::string& key, bool imag) {
        const json& rows = field(j, key);
        if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) {
            throw DimensionMismatch("'" + key + "' must have " + std::to_string(n) + " rows");
        }
        for (Eigen::Index r = 0; r < n; ++r) {
            const json& row = rows[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
                throw DimensionMismatch("'" + key + "' row " + std::to_string(r) + " must have " +
                                        std::to_string(n) + " entries");
            }
            for (Eigen::Index c = 0; c < n; ++c) {
                const double x = number(row[static_cast<std::size_t>(c)], key);
                if (imag) m(r, c).imag(x); else m(r, c).real(x);
            }
        }
    };
    fill("re", false);
    if (j.contains("im")) fill("im", true);
    return m;
}

Matrix load_matrix_file(const std::string& path) { return matrix_from_json(read_json_file(path)); }

json biortho_to_json(const BiorthoSystem& sys) {
    return {{"eigenvalues", vector_to_json(sys.eigenvalues())},
            {"right", matrix_to_json(sys.right())},
            {"left", matrix_to_json(sys.left())},
            {"condition_estimate", round12(sys.condition_estimate())},
            {"hbar", round12(sys.hbar())}};
}

BiorthoSystem biortho_from_json(const json& j) {
    Vector e = vector_from_json(field(j, "eigenvalues"), "eigenvalues");
    Matrix a = matrix_field(j, "right");
    Matrix b = matrix_field(j, "left");
    if (a.rows() != e.size() || b.rows() != e.size()) {
        throw DimensionMismatch("basis matrices do not match the eigenvalue count");
    }
    return BiorthoSystem(std::move(e), std::move(a), std::move(b),
                         number(field(j, "condition_estimate"), "condition_estimate"),
                         number(field(j, "hbar"), "hbar"));
}

json state_to_json(const CanonicalState& s) {
    json gauge = json::array();
    for (Eigen::Index i = 0; i < s.gauge().size(); ++i) gauge.push_back(round12(s.gauge()(i)));
    return {{"basis", biortho_to_json(s.basis())},
            {"c", vector_to_json(s.c())},
            {"c_bar", vector_to_json(s.c_bar())},
            {"gauge", gauge},
            {"time", round12(s.time())}};
}

CanonicalState state_from_json(const json& j) {
    auto basis = std::make_shared<const BiorthoSystem>(biortho_from_json(field(j, "basis")));
    const json& g = field(j, "gauge");
    if (!g.is_array()) throw ConfigError("'gauge' must be an array");
    RealVector gauge(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) gauge(static_cast<Eigen::Index>(i)) = number(g[i], "gauge");
    return CanonicalState(std::move(basis), vector_from_json(field(j, "c"), "c"),
                          vector_from_json(field(j, "c_bar"), "c_bar"), std::move(gauge),
                          number(field(j, "time"), "time"));
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
    if (!out) throw InputError("write failed for '" + path + "'");
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != width_) throw DimensionMismatch("CSV row width differs from header");
    for (std::size_t i = 0; i < values.size(); ++i) text_ += (i ? "," : "") + format12(values[i]);
    text_ += "\n";
    ++rows_;
}

PotentialSamples read_potential_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::vector<double> xs;
    std::vector<cplx> vs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cols;
        bool ok = true;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double x = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) ok = false;
            cols.push_back(x);
        }
        if (!ok && xs.empty() && line_no == 1) continue;
        if (!ok || cols.size() < 2 || cols.size() > 3) {
            throw ConfigError("'" + path + "' line " + std::to_string(line_no) +
                              ": expected x, Re V[, Im V]");
        }
        xs.push_back(cols[0]);
        vs.emplace_back(cols[1], cols.size() == 3 ? cols[2] : 0.0);
    }
    PotentialSamples out{RealVector(static_cast<Eigen::Index>(xs.size())),
                         Vector(static_cast<Eigen::Index>(vs.size()))};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out.x(static_cast<Eigen::Index>(i)) = xs[i];
        out.v(static_cast<Eigen::Index>(i)) = vs[i];
    }
    return out;
}

}  // namespace nhqm
