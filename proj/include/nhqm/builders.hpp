#pragma once

#include "nhqm/geometric.hpp"
#include "nhqm/gp.hpp"
#include "nhqm/io.hpp"
#include "nhqm/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nhqm {

struct ParamDef {
    std::string name;
    std::string description;
    std::optional<double> fallback;  // absent means required
};

enum class BuilderKind { matrix, potential };

struct BuilderInfo {
    std::string name;
    BuilderKind kind = BuilderKind::matrix;
    std::string description;
    std::vector<ParamDef> params;
    // Non-numeric keys the builder needs, e.g. a file path.
    std::vector<std::string> string_params;
};

using NumericParams = std::map<std::string, double>;

class BuilderRegistry {
  public:
    using MatrixFn = std::function<Matrix(const NumericParams&)>;
    using PotentialFn = std::function<Vector(const Grid1D&, const NumericParams&)>;

    // pt2x2, spin_half, matrix_file, harmonic, complex_well.
    static BuilderRegistry with_defaults();

    void add_matrix(BuilderInfo info, MatrixFn fn);
    void add_potential(BuilderInfo info, PotentialFn fn);
    // Loads the JSON matrix now and registers it as a parameterless builder.
    void register_matrix_file(const std::string& name, const std::string& path);

    std::vector<BuilderInfo> list() const;
    const BuilderInfo& info(const std::string& name) const;
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    // Resolves defaults and rejects missing or non-finite keys with ConfigError.
    NumericParams resolve(const std::string& name, const json& params) const;

    Matrix build_matrix(const std::string& name, const json& params) const;
    Vector build_potential(const std::string& name, const Grid1D& grid, const json& params) const;

    // Family over the keys in `vary`, the rest held at their values in `params`.
    ParametricFamily family(const std::string& name, const json& params,
                            const std::vector<std::string>& vary, double hbar = 1.0) const;

    json catalog() const;

  private:
    struct Entry {
        BuilderInfo info;
        MatrixFn matrix;
        PotentialFn potential;
    };
    const Entry& entry(const std::string& name) const;
    std::map<std::string, Entry> entries_;
};

}  // namespace nhqm
