#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdelab/carleman/geometry.hpp"
#include "spdelab/carleman/jet.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/measurements.hpp"
#include "spdelab/stability.hpp"

namespace spde::cli {

using json = nlohmann::json;

// Arithmetic over t, x (= x1), x2 with + - * /, unary minus, sin, cos, exp
// and parentheses. Evaluates on doubles and on jets.
class Expr {
public:
    static Expr parse(const std::string& text);
    static Expr constant(double c);

    double operator()(double t, const Point& x) const;
    JetD operator()(const JetD& t, const JetD& x1, const JetD& x2) const;
    const std::string& text() const { return text_; }

    Field at_time(double t) const;
    JetField jet() const;

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

// Typed view of one JSON object; errors name the dotted field path. finish()
// rejects keys that were never read.
class Section {
public:
    Section(const json& j, std::string path);

    const std::string& path() const { return path_; }
    bool has(const std::string& key) const;
    const json& value(const std::string& key) const;

    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    int integer(const std::string& key) const;
    int integer(const std::string& key, int fallback) const;
    std::uint64_t unsigned_integer(const std::string& key) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<int> integers(const std::string& key) const;
    Expr expr(const std::string& key) const;
    std::optional<Expr> optional_expr(const std::string& key) const;
    Section child(const std::string& key) const;
    std::optional<Section> optional_child(const std::string& key) const;
    std::vector<Section> children(const std::string& key) const;

    void finish() const;

private:
    const json& at(const std::string& key) const;
    std::string field(const std::string& key) const;

    const json* j_;
    std::string path_;
    mutable std::set<std::string> used_;
};

// Parses config text; syntax errors report line and column.
json parse_config(const std::string& text);

GridSpec read_grid(const Section& s);
TimeGrid read_time(const Section& s);
NoiseSpec read_noise(const Section& s);
NormKind read_norm(const std::string& field, const std::string& name);

// Coefficient expressions sampled at t = 0; sources are sampled per step.
struct ParabolicExprs {
    std::optional<Expr> b, b1x, b1y, b2, b3, f, g, y0;
};
struct HyperbolicExprs {
    std::optional<Expr> b, b1, b2x, b2y, b3, b4, f, g, z0, z1;
};
ParabolicExprs read_parabolic(const Section& s);
HyperbolicExprs read_hyperbolic(const Section& s);

ParabolicFields fields_of(const ParabolicExprs& e);
HyperbolicFields fields_of(const HyperbolicExprs& e);
ParabolicCoefficients sample_parabolic(const ParabolicExprs& e, const Grid& grid, const TimeGrid& time);
HyperbolicCoefficients sample_hyperbolic(const HyperbolicExprs& e, const Grid& grid, const TimeGrid& time);
// nodes x steps, column k sampled at t_k.
Mat sample_source(const Expr& e, const Grid& grid, const TimeGrid& time);

TensorField read_tensor(const Section& s, const std::string& key);

// FNV-1a over the canonical dump.
std::uint64_t config_hash(const json& j);

}  // namespace spde::cli
