#include "nhqm/builders.hpp"

#include "nhqm/errors.hpp"

#include <cmath>
#include <complex>

namespace nhqm {

namespace {

using namespace std::complex_literals;

double get(const NumericParams& p, const std::string& key) { return p.at(key); }

const char* kind_name(BuilderKind k) { return k == BuilderKind::matrix ? "matrix" : "potential"; }

}  // namespace

BuilderRegistry BuilderRegistry::with_defaults() {
    BuilderRegistry r;
    r.add_matrix({"pt2x2", BuilderKind::matrix,
                  "[[i gamma, kappa - i kappa_y], [kappa + i kappa_y, -i gamma]]",
                  {{"kappa", "real coupling", std::nullopt},
                   {"gamma", "gain/loss rate", std::nullopt},
                   {"kappa_y", "imaginary coupling", 0.0}},
                  {}},
                 [](const NumericParams& p) {
                     Matrix h(2, 2);
                     const double k = get(p, "kappa"), g = get(p, "gamma"), ky = get(p, "kappa_y");
                     h << 1i * g, cplx(k, -ky), cplx(k, ky), -1i * g;
                     return h;
                 });
    r.add_matrix({"spin_half", BuilderKind::matrix, "bx sigma_x + by sigma_y + bz sigma_z",
                  {{"bx", "field x", 0.0}, {"by", "field y", 0.0}, {"bz", "field z", 0.0}},
                  {}},
                 [](const NumericParams& p) {
                     Matrix h(2, 2);
                     const double x = get(p, "bx"), y = get(p, "by"), z = get(p, "bz");
                     h << z, cplx(x, -y), cplx(x, y), -z;
                     return h;
                 });
    // The path is read at build time, so this one is special-cased in build_matrix.
    r.add_matrix({"matrix_file", BuilderKind::matrix,
                  "dense matrix read from a JSON file {dim, re, im}", {}, {"path"}},
                 nullptr);
    r.add_potential({"harmonic", BuilderKind::potential, "0.5 mass omega^2 (x - x0)^2",
                     {{"omega", "trap frequency", 1.0},
                      {"mass", "particle mass", 1.0},
                      {"x0", "trap center", 0.0}},
                     {}},
                    [](const Grid1D& g, const NumericParams& p) {
                        return harmonic_potential(g, get(p, "omega"), get(p, "mass"), get(p, "x0"));
                    });
    r.add_potential({"complex_well", BuilderKind::potential,
                     "0.5 omega^2 x^2 + i gamma exp(-x^2 / (2 width^2))",
                     {{"omega", "trap frequency", 1.0},
                      {"gamma", "imaginary well depth", std::nullopt},
                      {"width", "imaginary well width", 1.0}},
                     {}},
                    [](const Grid1D& g, const NumericParams& p) {
                        return complex_well_potential(g, get(p, "omega"), get(p, "gamma"),
                                                      get(p, "width"));
                    });
    return r;
}

void BuilderRegistry::add_matrix(BuilderInfo info, MatrixFn fn) {
    info.kind = BuilderKind::matrix;
    const std::string name = info.name;
    entries_[name] = Entry{std::move(info), std::move(fn), nullptr};
}

void BuilderRegistry::add_potential(BuilderInfo info, PotentialFn fn) {
    info.kind = BuilderKind::potential;
    const std::string name = info.name;
    entries_[name] = Entry{std::move(info), nullptr, std::move(fn)};
}

void BuilderRegistry::register_matrix_file(const std::string& name, const std::string& path) {
    if (contains(name)) throw ConfigError("builder '" + name + "' already exists");
    Matrix m = load_matrix_file(path);
    add_matrix({name, BuilderKind::matrix, "matrix loaded from " + path, {}, {}},
               [m](const NumericParams&) { return m; });
}

std::vector<BuilderInfo> BuilderRegistry::list() const {
    std::vector<BuilderInfo> out;
    for (const auto& [name, e] : entries_) out.push_back(e.info);
    return out;
}

const BuilderRegistry::Entry& BuilderRegistry::entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown builder '" + name + "'");
    return it->second;
}

const BuilderInfo& BuilderRegistry::info(const std::string& name) const { return entry(name).info; }

NumericParams BuilderRegistry::resolve(const std::string& name, const json& params) const {
    const auto& e = entry(name);
    if (!params.is_null() && !params.is_object()) throw ConfigError("'params' must be an object");
    NumericParams out;
    for (const auto& def : e.info.params) {
        if (params.is_object() && params.contains(def.name)) {
            const json& v = params.at(def.name);
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                throw ConfigError("parameter '" + def.name + "' of builder '" + name +
                                  "' must be a finite number");
            }
            out[def.name] = v.get<double>();
        } else if (def.fallback) {
            out[def.name] = *def.fallback;
        } else {
            throw ConfigError("missing key '" + def.name + "' for builder '" + name + "'");
        }
    }
    for (const auto& key : e.info.string_params) {
        if (!params.is_object() || !params.contains(key) || !params.at(key).is_string()) {
            throw ConfigError("missing key '" + key + "' for builder '" + name + "'");
        }
    }
    return out;
}

Matrix BuilderRegistry::build_matrix(const std::string& name, const json& params) const {
    const auto& e = entry(name);
    if (e.info.kind != BuilderKind::matrix) {
        throw ConfigError("builder '" + name + "' makes a potential, not a matrix");
    }
    const NumericParams p = resolve(name, params);
    if (!e.matrix) return load_matrix_file(params.at("path").get<std::string>());
    return e.matrix(p);
}

Vector BuilderRegistry::build_potential(const std::string& name, const Grid1D& grid,
                                        const json& params) const {
    const auto& e = entry(name);
    if (e.info.kind != BuilderKind::potential) {
        throw ConfigError("builder '" + name + "' makes a matrix, not a potential");
    }
    return e.potential(grid, resolve(name, params));
}

ParametricFamily BuilderRegistry::family(const std::string& name, const json& params,
                                         const std::vector<std::string>& vary, double hbar) const {
    const auto& e = entry(name);
    if (e.info.kind != BuilderKind::matrix || !e.matrix) {
        throw ConfigError("builder '" + name + "' cannot be varied along a path");
    }
    if (vary.empty()) throw ConfigError("'vary' must name at least one parameter");
    for (const auto& key : vary) {
        bool known = false;
        for (const auto& s : e.info.params) known = known || s.name == key;
        if (!known) throw ConfigError("'vary' names unknown parameter '" + key + "'");
    }
    json base = params.is_object() ? params : json::object();
    for (const auto& key : vary) {
        if (!base.contains(key)) base[key] = 0.0;
    }
    const NumericParams fixed = resolve(name, base);
    auto fn = e.matrix;
    return ParametricFamily{name, static_cast<Eigen::Index>(vary.size()),
                            [fn, fixed, vary](const RealVector& r) {
                                NumericParams p = fixed;
                                for (std::size_t i = 0; i < vary.size(); ++i) {
                                    p[vary[i]] = r(static_cast<Eigen::Index>(i));
                                }
                                return fn(p);
                            },
                            hbar};
}

json BuilderRegistry::catalog() const {
    json list = json::array();
    for (const auto& [name, e] : entries_) {
        json params = json::array();
        for (const auto& s : e.info.params) {
            json p = {{"name", s.name}, {"type", "number"}, {"description", s.description},
                      {"required", !s.fallback.has_value()}};
            if (s.fallback) p["default"] = *s.fallback;
            params.push_back(std::move(p));
        }
        for (const auto& s : e.info.string_params) {
            params.push_back({{"name", s}, {"type", "string"}, {"required", true}});
        }
        list.push_back({{"name", name},
                        {"kind", kind_name(e.info.kind)},
                        {"description", e.info.description},
                        {"params", params}});
    }
    return {{"builders", list}};
}

}  // namespace nhqm
