#include "nhqm/scenario.hpp"

#include "nhqm/errors.hpp"
#include "nhqm/fock.hpp"
#include "nhqm/geometric.hpp"
#include "nhqm/gp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <optional>
#include <random>
#include <thread>

namespace nhqm {

namespace {

// Typed access to a JSON object; every failure names the offending key.
class Config {
  public:
    explicit Config(const json& j, std::string prefix = "") : j_(j), prefix_(std::move(prefix)) {
        if (!j_.is_object()) throw ConfigError(where("") + "must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const json& raw(const std::string& key) const {
        if (!has(key)) throw ConfigError("missing key '" + name(key) + "'");
        return j_.at(key);
    }
    Config sub(const std::string& key) const { return Config(raw(key), name(key) + "."); }

    double num(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError("key '" + name(key) + "' must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError("key '" + name(key) + "' must be finite");
        return x;
    }
    double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

    double positive(const std::string& key, std::optional<double> fallback = {}) const {
        const double x = fallback && !has(key) ? *fallback : num(key);
        if (!(x > 0.0)) throw ConfigError("key '" + name(key) + "' must be positive");
        return x;
    }

    long long integer(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError("key '" + name(key) + "' must be an integer");
        return v.get<long long>();
    }
    long long integer(const std::string& key, long long fallback) const {
        return has(key) ? integer(key) : fallback;
    }
    std::size_t count(const std::string& key, long long fallback, long long min = 0) const {
        const long long v = integer(key, fallback);
        if (v < min) {
            throw ConfigError("key '" + name(key) + "' must be at least " + std::to_string(min));
        }
        return static_cast<std::size_t>(v);
    }

    std::string str(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError("key '" + name(key) + "' must be a string");
        return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& fallback) const {
        return has(key) ? str(key) : fallback;
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!raw(key).is_boolean()) throw ConfigError("key '" + name(key) + "' must be true or false");
        return raw(key).get<bool>();
    }

    RealVector reals(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError("key '" + name(key) + "' must be an array of numbers");
        RealVector out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                throw ConfigError("key '" + name(key) + "' must be an array of finite numbers");
            }
            out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
        }
        return out;
    }

    Vector complexes(const std::string& key) const {
        try {
            return vector_from_json(raw(key), name(key));
        } catch (const ConfigError& e) {
            throw ConfigError("key '" + name(key) + "': " + e.what());
        }
    }

    std::vector<std::string> strings(const std::string& key) const {
        const json& v = raw(key);
        std::vector<std::string> out;
        if (v.is_string()) return {v.get<std::string>()};
        if (!v.is_array()) throw ConfigError("key '" + name(key) + "' must be a list of names");
        for (const auto& s : v) {
            if (!s.is_string()) throw ConfigError("key '" + name(key) + "' must be a list of names");
            out.push_back(s.get<std::string>());
        }
        return out;
    }

    const json& doc() const { return j_; }
    std::string name(const std::string& key) const { return prefix_ + key; }

  private:
    std::string where(const std::string& key) const {
        return prefix_.empty() && key.empty() ? "config " : "'" + prefix_ + key + "' ";
    }
    const json& j_;
    std::string prefix_;
};

// Builder parameters come from "params", with top-level keys as a fallback.
json builder_params(const Config& cfg, const BuilderRegistry& reg, const std::string& builder) {
    json p = cfg.has("params") ? cfg.raw("params") : json::object();
    if (!p.is_object()) throw ConfigError("key 'params' must be an object");
    const auto& info = reg.info(builder);
    for (const auto& s : info.params) {
        if (!p.contains(s.name) && cfg.has(s.name)) p[s.name] = cfg.raw(s.name);
    }
    for (const auto& s : info.string_params) {
        if (!p.contains(s) && cfg.has(s)) p[s] = cfg.raw(s);
    }
    return p;
}

Matrix load_hamiltonian_matrix(const Config& cfg, const BuilderRegistry& reg) {
    if (cfg.has("matrix")) return matrix_from_json(cfg.raw("matrix"));
    if (cfg.has("matrix_file")) return load_matrix_file(cfg.str("matrix_file"));
    if (!cfg.has("builder")) throw ConfigError("missing key 'builder' (or 'matrix' / 'matrix_file')");
    const std::string b = cfg.str("builder");
    return reg.build_matrix(b, builder_params(cfg, reg, b));
}

json opt_complex(const std::optional<cplx>& z) { return z ? complex_to_json(*z) : json(nullptr); }

std::vector<double> split(cplx z) { return {z.real(), z.imag()}; }

void append(std::vector<double>& row, cplx z) {
    row.push_back(z.real());
    row.push_back(z.imag());
}

void append(std::vector<std::string>& header, const std::string& base) {
    header.push_back("re_" + base);
    header.push_back("im_" + base);
}

Vector random_state(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(u(rng), u(rng));
    return v / v.norm();
}

// ---------------------------------------------------------------- kinds

ScenarioResult run_diagonalize(const Config& cfg, const BuilderRegistry& reg) {
    const Hamiltonian h(load_hamiltonian_matrix(cfg, reg), cfg.positive("hbar", 1.0));
    const auto sys = diagonalize_biortho(h);
    ScenarioResult out;
    out.summary = {{"dim", sys.dim()},
                   {"eigenvalues", vector_to_json(sys.eigenvalues())},
                   {"hermitian", h.is_hermitian()},
                   {"condition_estimate", round12(sys.condition_estimate())},
                   {"biorthonormality_error", round12(biorthonormality_error(sys))},
                   {"completeness_error", round12(verify_completeness(sys))},
                   {"eigen_residual", round12(eigen_residual(h, sys))}};
    if (cfg.flag("include_basis", false)) out.summary["basis"] = biortho_to_json(sys);
    CsvWriter csv({"index", "re_E", "im_E"});
    for (Eigen::Index k = 0; k < sys.dim(); ++k) {
        csv.row({static_cast<double>(k), sys.eigenvalue(k).real(), sys.eigenvalue(k).imag()});
    }
    out.traces.push_back({"spectrum", csv.text()});
    return out;
}

ScenarioResult run_evolve(const Config& cfg, const BuilderRegistry& reg, std::uint64_t seed) {
    const Hamiltonian h(load_hamiltonian_matrix(cfg, reg), cfg.positive("hbar", 1.0));
    const double t_max = cfg.positive("t_max");
    const double dt = cfg.positive("dt", 1e-3);
    auto basis = std::make_shared<const BiorthoSystem>(diagonalize_biortho(h));
    const Eigen::Index n = basis->dim();

    Vector psi0;
    if (!cfg.has("psi0")) {
        psi0 = Vector::Zero(n);
        psi0(0) = 1.0;
    } else if (cfg.raw("psi0").is_string()) {
        if (cfg.str("psi0") != "random") throw ConfigError("key 'psi0' must be a vector or \"random\"");
        psi0 = random_state(n, seed);
    } else {
        psi0 = cfg.complexes("psi0");
    }
    if (psi0.size() != n) {
        throw DimensionMismatch("key 'psi0' has " + std::to_string(psi0.size()) +
                                " components, the Hamiltonian has " + std::to_string(n));
    }
    StateOptions sopts;
    sopts.normalize = cfg.flag("normalize", true);
    const CanonicalState state = cfg.has("gauge")
                                     ? state_from_right(basis, psi0, cfg.reals("gauge"), sopts)
                                     : state_from_right(basis, psi0, sopts);
    OdeOptions oopts;
    const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));
    oopts.sample_every = cfg.count("sample_every", static_cast<long long>(std::max<std::size_t>(1, steps / 1000)), 1);
    oopts.max_phase_step = cfg.positive("max_phase_step", oopts.max_phase_step);
    const Trajectory traj = evolve_ode(to_fields(state), h, {0.0, t_max}, dt, oopts);

    std::vector<std::string> header{"t"};
    for (Eigen::Index j = 0; j < n; ++j) append(header, "c" + std::to_string(j));
    for (Eigen::Index j = 0; j < n; ++j) append(header, "cbar" + std::to_string(j));
    append(header, "total_probability");
    append(header, "field_energy");
    header.push_back("norm2");
    CsvWriter csv(header);
    const cplx p0 = traj.samples.front().probability;
    const cplx e0 = traj.samples.front().energy;
    double worst_p = 0.0;
    double worst_e = 0.0;
    for (const auto& s : traj.samples) {
        std::vector<double> row{s.t};
        for (Eigen::Index j = 0; j < n; ++j) append(row, s.c(j));
        for (Eigen::Index j = 0; j < n; ++j) append(row, s.c_bar(j));
        append(row, s.probability);
        append(row, s.energy);
        row.push_back(s.norm2);
        csv.row(row);
        worst_p = std::max(worst_p, std::abs(s.probability - p0));
        worst_e = std::max(worst_e, std::abs(s.energy - e0));
    }
    const CanonicalState final_state = evolve_spectral(state, traj.samples.back().t);
    const double closed_norm = to_fields(final_state).psi.squaredNorm();
    const double ode_norm = traj.samples.back().norm2;

    ScenarioResult out;
    out.summary = {{"t_max", round12(t_max)},
                   {"dt", round12(dt)},
                   {"samples", traj.samples.size()},
                   {"initial_probability", complex_to_json(p0)},
                   {"max_probability_drift", round12(worst_p)},
                   {"initial_field_energy", complex_to_json(e0)},
                   {"max_field_energy_drift", round12(worst_e)},
                   {"norm2_initial", round12(traj.samples.front().norm2)},
                   {"norm2_final", round12(ode_norm)},
                   {"norm2_closed_form", round12(closed_norm)},
                   {"norm2_relative_error", round12(std::abs(ode_norm - closed_norm) / closed_norm)},
                   {"final_state", state_to_json(final_state)}};
    out.traces.push_back({"trajectory", csv.text()});
    return out;
}

ParametricFamily family_from(const Config& cfg, const BuilderRegistry& reg) {
    const std::string b = cfg.str("builder");
    return reg.family(b, builder_params(cfg, reg, b), cfg.strings("vary"), cfg.positive("hbar", 1.0));
}

ParameterPath path_from(const Config& cfg, const ParametricFamily& family) {
    const Config p = cfg.sub("path");
    if (p.has("circle")) {
        const Config c = p.sub("circle");
        int a0 = 0, a1 = 1;
        if (c.has("axes")) {
            const RealVector ax = c.reals("axes");
            if (ax.size() != 2) throw ConfigError("key '" + c.name("axes") + "' must have two entries");
            a0 = static_cast<int>(ax(0));
            a1 = static_cast<int>(ax(1));
        }
        return circle_path(family, c.reals("center"), c.positive("radius"),
                           c.count("points", 0, 3), a0, a1);
    }
    const json& pts = p.raw("points");
    if (!pts.is_array()) throw ConfigError("key 'path.points' must be a list of points");
    std::vector<RealVector> samples;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        json wrap = {{"point", pts[i]}};
        samples.push_back(Config(wrap, "path.points[" + std::to_string(i) + "].").reals("point"));
    }
    return ParameterPath(family, std::move(samples), p.flag("closed", true));
}

json report_json(const PhaseReport& r) {
    return {{"mode_index", r.mode_index},
            {"dynamical_phase", opt_complex(r.dynamical_phase)},
            {"geometric_phase_right", complex_to_json(r.geometric_phase_right)},
            {"geometric_phase_left", complex_to_json(r.geometric_phase_left)},
            {"conjugation_error",
             round12(std::abs(r.geometric_phase_left - std::conj(r.geometric_phase_right)))},
            {"loop_occupation", opt_complex(r.loop_occupation)},
            {"adiabaticity_ratio",
             r.adiabaticity_ratio ? json(round12(*r.adiabaticity_ratio)) : json(nullptr)}};
}

ScenarioResult run_berry(const Config& cfg, const BuilderRegistry& reg) {
    const ParametricFamily family = family_from(cfg, reg);
    const ParameterPath path = path_from(cfg, family);
    std::vector<cplx> cumulative;
    const PhaseReport r = geometric_phase_loop(path, cfg.integer("mode", 0), &cumulative);
    CsvWriter csv({"step", "re_beta", "im_beta"});
    for (std::size_t k = 0; k < cumulative.size(); ++k) {
        csv.row({static_cast<double>(k + 1), cumulative[k].real(), cumulative[k].imag()});
    }
    ScenarioResult out;
    out.summary = report_json(r);
    out.summary["points"] = path.samples().size();
    out.traces.push_back({"phase", csv.text()});
    return out;
}

ScenarioResult run_adiabatic(const Config& cfg, const BuilderRegistry& reg) {
    const ParametricFamily family = family_from(cfg, reg);
    const ParameterPath path = path_from(cfg, family);
    AdiabaticOptions o;
    const std::string sched = cfg.str("schedule", "smooth");
    if (sched == "smooth") o.schedule = Schedule::smooth;
    else if (sched == "uniform") o.schedule = Schedule::uniform;
    else throw ConfigError("key 'schedule' must be \"smooth\" or \"uniform\"");
    o.ramp_fraction = cfg.num("ramp_fraction", o.ramp_fraction);
    o.max_ratio = cfg.positive("max_ratio", o.max_ratio);
    o.max_phase_step = cfg.positive("max_phase_step", o.max_phase_step);
    o.record_every = cfg.count("record_every", 0);
    const double total = cfg.positive("T");
    const double dt = cfg.positive("dt", 0.02);
    const Eigen::Index mode = cfg.integer("mode", 0);

    std::vector<AdiabaticSample> trace;
    const PhaseReport r = adiabatic_evolve(path, mode, total, dt, o, &trace);
    const PhaseReport loop = geometric_phase_loop(path, mode);
    CsvWriter csv({"t", "re_c", "im_c", "re_cbar", "im_cbar", "re_E", "im_E"});
    for (const auto& s : trace) {
        std::vector<double> row{s.t};
        append(row, s.c);
        append(row, s.c_bar);
        append(row, s.energy);
        csv.row(row);
    }
    ScenarioResult out;
    out.summary = report_json(r);
    out.summary["T"] = round12(total);
    out.summary["dt"] = round12(dt);
    out.summary["loop_geometric_phase_right"] = complex_to_json(loop.geometric_phase_right);
    out.traces.push_back({"trace", csv.text()});
    return out;
}

ScenarioResult run_curvature(const Config& cfg, const BuilderRegistry& reg) {
    const ParametricFamily family = family_from(cfg, reg);
    const RealVector r = cfg.reals("point");
    const Eigen::Index mode = cfg.integer("mode", 0);
    const double delta = cfg.num("delta", 0.0);
    ScenarioResult out;
    const Vector right = berry_connection_right(family, r, mode, delta);
    const Vector left = berry_connection_left(family, r, mode, delta);
    out.summary = {{"mode_index", mode},
                   {"connection_right", vector_to_json(right)},
                   {"connection_left", vector_to_json(left)},
                   {"conjugation_error", round12((left - right.conjugate()).cwiseAbs().maxCoeff())},
                   {"curvature", nullptr}};
    if (r.size() == 3) out.summary["curvature"] = vector_to_json(berry_curvature(family, r, mode, delta));
    return out;
}

ScenarioResult run_fock(const Config& cfg) {
    const std::string stats = cfg.str("statistics", "boson");
    Statistics s;
    if (stats == "boson") s = Statistics::boson;
    else if (stats == "fermion") s = Statistics::fermion;
    else throw ConfigError("key 'statistics' must be \"boson\" or \"fermion\"");

    std::shared_ptr<const FockSpace> space;
    if (cfg.has("cutoffs")) {
        const RealVector c = cfg.reals("cutoffs");
        std::vector<int> cut;
        for (Eigen::Index i = 0; i < c.size(); ++i) cut.push_back(static_cast<int>(c(i)));
        space = std::make_shared<const FockSpace>(cut, s);
    } else {
        space = std::make_shared<const FockSpace>(static_cast<int>(cfg.count("modes", 0, 1)), s,
                                                  static_cast<int>(cfg.count("cutoff", 4, 1)));
    }

    std::vector<std::string> warnings;
    std::optional<ManyBodyOperator> h;
    if (cfg.has("h_prime")) {
        std::optional<Matrix> u;
        if (cfg.has("pair_potential")) u = matrix_from_json(cfg.raw("pair_potential"));
        const cplx lambda = cfg.has("lambda") ? complex_from_json(cfg.raw("lambda"), "lambda") : 0.0;
        h = build_interacting_hamiltonian(space, matrix_from_json(cfg.raw("h_prime")), lambda, u,
                                          &warnings);
    } else {
        h = build_free_hamiltonian(space, cfg.complexes("energies"));
    }
    const Vector e = spectrum(*h);
    const Vector n = spectrum(total_number_operator(space));

    ScenarioResult out;
    out.summary = {{"dim", space->dim()},
                   {"statistics", stats},
                   {"spectrum", vector_to_json(e)},
                   {"number_spectrum", vector_to_json(n)},
                   {"warnings", warnings}};
    if (cfg.flag("include_operator", false)) out.summary["operator"] = matrix_to_json(h->matrix());
    CsvWriter csv({"re_E", "im_E"});
    for (Eigen::Index k = 0; k < e.size(); ++k) csv.row(split(e(k)));
    out.traces.push_back({"spectrum", csv.text()});
    return out;
}

ScenarioResult run_gp(const Config& cfg, const BuilderRegistry& reg) {
    std::optional<Grid1D> grid;
    Vector v;
    GPOptions o;
    o.params.hbar = cfg.positive("hbar", 1.0);
    o.params.mass = cfg.positive("mass", 1.0);
    if (cfg.has("potential_csv")) {
        const auto samples = read_potential_csv(cfg.str("potential_csv"));
        const auto m = static_cast<std::size_t>(samples.x.size());
        if (m < 16) throw ConfigError("key 'potential_csv' needs at least 16 rows");
        const Boundary b = cfg.str("boundary", "dirichlet") == "periodic" ? Boundary::periodic
                                                                        : Boundary::dirichlet;
        const double dx = samples.x(1) - samples.x(0);
        for (std::size_t i = 1; i < m; ++i) {
            const double step = samples.x(static_cast<Eigen::Index>(i)) - samples.x(static_cast<Eigen::Index>(i - 1));
            if (std::abs(step - dx) > 1e-9 * std::abs(dx)) {
                throw ConfigError("key 'potential_csv' must sample a uniform grid");
            }
        }
        const double x_max = b == Boundary::periodic ? samples.x(samples.x.size() - 1) + dx
                                                     : samples.x(samples.x.size() - 1);
        grid.emplace(m, samples.x(0), x_max, b);
        v = samples.v;
    } else {
        const Config g = cfg.sub("grid");
        const std::string bname = g.str("boundary", "dirichlet");
        if (bname != "dirichlet" && bname != "periodic") {
            throw ConfigError("key 'grid.boundary' must be \"dirichlet\" or \"periodic\"");
        }
        grid.emplace(g.count("points", 0, 16), g.num("x_min"), g.num("x_max"),
                     bname == "periodic" ? Boundary::periodic : Boundary::dirichlet);
        const Config p = cfg.sub("potential");
        const std::string name = p.str("builder");
        v = reg.build_potential(name, *grid, builder_params(p, reg, name));
    }
    const cplx c = cfg.has("c") ? complex_from_json(cfg.raw("c"), "c") : 0.0;
    o.mix = cfg.num("mix", o.mix);
    o.tol = cfg.positive("tol", o.tol);
    o.max_iter = cfg.count("max_iter", static_cast<long long>(o.max_iter), 1);
    o.gauge = cfg.positive("gauge", o.gauge);

    const GPSolution sol = solve_self_consistent(*grid, v, c, o);
    CsvWriter csv({"x", "re_psi", "im_psi", "re_phibar", "im_phibar", "re_density", "im_density"});
    for (std::size_t i = 0; i < grid->n_points(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        std::vector<double> row{grid->x(i)};
        append(row, sol.psi(k));
        append(row, sol.phi_bar(k));
        append(row, sol.phi_bar(k) * sol.psi(k));
        csv.row(row);
    }
    ScenarioResult out;
    out.summary = {{"mu", complex_to_json(sol.mu)},
                   {"residual", round12(sol.residual)},
                   {"iterations", sol.iterations},
                   {"left_mismatch", round12(sol.left_mismatch)},
                   {"normalization", complex_to_json(grid->integrate(sol.phi_bar, sol.psi))},
                   {"points", grid->n_points()},
                   {"spacing", round12(grid->spacing())}};
    out.traces.push_back({"solution", csv.text()});
    return out;
}

ScenarioResult run_single(const std::string& kind, const json& doc, std::uint64_t seed,
                          const BuilderRegistry& reg) {
    const Config cfg(doc);
    ScenarioResult r;
    if (kind == "diagonalize") r = run_diagonalize(cfg, reg);
    else if (kind == "evolve") r = run_evolve(cfg, reg, seed);
    else if (kind == "berry") r = run_berry(cfg, reg);
    else if (kind == "curvature") r = run_curvature(cfg, reg);
    else if (kind == "adiabatic") r = run_adiabatic(cfg, reg);
    else if (kind == "fock") r = run_fock(cfg);
    else if (kind == "gp") r = run_gp(cfg, reg);
    else throw ConfigError("unknown scenario kind '" + kind + "'");
    json head = {{"kind", kind}, {"seed", seed}};
    head.update(r.summary);
    r.summary = std::move(head);
    return r;
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
    unsigned n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("NHQM_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end == env || *end != '\0' || v < 1) {
                throw ConfigError("NHQM_THREADS must be a positive integer");
            }
            n = static_cast<unsigned>(v);
        } else {
            n = std::max(1u, std::thread::hardware_concurrency());
        }
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

}  // namespace

const std::vector<std::string>& scenario_kinds() {
    static const std::vector<std::string> kinds{"diagonalize", "evolve",    "berry", "curvature",
                                                "adiabatic",   "fock",      "gp"};
    return kinds;
}

ScenarioResult run_scenario(const std::string& kind, const json& config, std::uint64_t seed,
                            const BuilderRegistry& registry, unsigned threads) {
    const Config cfg(config);
    if (cfg.has("kind") && cfg.str("kind") != kind) {
        throw ConfigError("key 'kind' is '" + cfg.str("kind") + "' but the command asks for '" +
                          kind + "'");
    }
    if (!cfg.has("sweep")) return run_single(kind, config, seed, registry);

    const Config sw = cfg.sub("sweep");
    const std::string key = sw.str("key");
    const RealVector values = sw.reals("values");
    if (values.size() == 0) throw ConfigError("key 'sweep.values' must not be empty");
    std::string path = "/" + key;
    std::replace(path.begin(), path.end(), '.', '/');
    json::json_pointer pointer;
    try {
        pointer = json::json_pointer(path);
    } catch (const json::exception&) {
        throw ConfigError("key 'sweep.key' is not a valid path: " + key);
    }

    const auto jobs = static_cast<std::size_t>(values.size());
    std::vector<ScenarioResult> results(jobs);
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs;) {
            try {
                json point = config;
                point.erase("sweep");
                point[pointer] = values(static_cast<Eigen::Index>(i));
                results[i] = run_single(kind, point, seed, registry);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = worker_count(threads, jobs);
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ScenarioResult out;
    json points = json::array();
    for (std::size_t i = 0; i < jobs; ++i) {
        points.push_back({{key, round12(values(static_cast<Eigen::Index>(i)))},
                          {"result", std::move(results[i].summary)}});
        for (auto& t : results[i].traces) {
            out.traces.push_back({t.name + "_" + std::to_string(i), std::move(t.csv)});
        }
    }
    out.summary = {{"kind", kind}, {"seed", seed}, {"sweep_key", key}, {"points", points}};
    return out;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const PhysicsError*>(&e)) return 2;
    return 1;
}

}  // namespace nhqm
