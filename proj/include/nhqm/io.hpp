#pragma once

#include "nhqm/biortho.hpp"
#include "nhqm/canonical.hpp"
#include "nhqm/types.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace nhqm {

using json = nlohmann::json;

// Nearest double to x printed with 12 significant digits.
double round12(double x);
// "%.12g"
std::string format12(double x);

// [re, im], each rounded to 12 significant digits.
json complex_to_json(cplx z);
cplx complex_from_json(const json& j, const std::string& key = "value");

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j, const std::string& key = "vector");

// {"dim": n, "re": [[...]], "im": [[...]]}, row-major.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
Matrix load_matrix_file(const std::string& path);

json biortho_to_json(const BiorthoSystem& sys);
BiorthoSystem biortho_from_json(const json& j);

// Snapshot with its basis; re-loads into an equal state.
json state_to_json(const CanonicalState& state);
CanonicalState state_from_json(const json& j);

// Pretty-printed, newline-terminated.
std::string dump(const json& j);
json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<double>& values);
    const std::string& text() const { return text_; }
    std::size_t rows() const { return rows_; }

  private:
    std::size_t width_;
    std::size_t rows_ = 0;
    std::string text_;
};

struct PotentialSamples {
    RealVector x;
    Vector v;
};

// Rows of x, Re V, Im V. A header line is skipped if it does not parse.
PotentialSamples read_potential_csv(const std::string& path);

}  // namespace nhqm
