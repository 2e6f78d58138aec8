#include "config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "spdelab/error.hpp"

namespace spde::cli {

struct Expr::Node {
    enum Kind { number, var_t, var_x1, var_x2, add, sub, mul, div, neg, fn_sin, fn_cos, fn_exp } kind = number;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;

    template <class S>
    S eval(const S& t, const S& x1, const S& x2) const {
        using std::cos;
        using std::exp;
        using std::sin;
        switch (kind) {
            case number: return S(value);
            case var_t: return t;
            case var_x1: return x1;
            case var_x2: return x2;
            case add: return a->eval(t, x1, x2) + b->eval(t, x1, x2);
            case sub: return a->eval(t, x1, x2) - b->eval(t, x1, x2);
            case mul: return a->eval(t, x1, x2) * b->eval(t, x1, x2);
            case div: return a->eval(t, x1, x2) / b->eval(t, x1, x2);
            case neg: return -a->eval(t, x1, x2);
            case fn_sin: return sin(a->eval(t, x1, x2));
            case fn_cos: return cos(a->eval(t, x1, x2));
            case fn_exp: return exp(a->eval(t, x1, x2));
        }
        return S(0.0);
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make(Expr::Node::Kind kind, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = kind;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = value;
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    NodePtr parse() {
        NodePtr e = sum();
        skip();
        if (i_ != s_.size()) error("unexpected '" + std::string(1, s_[i_]) + "'");
        return e;
    }

private:
    [[noreturn]] void error(const std::string& what) const {
        fail("expression '" + s_ + "': " + what + " at column " + std::to_string(i_ + 1));
    }

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    bool accept(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    NodePtr sum() {
        NodePtr e = product();
        for (;;) {
            if (accept('+')) e = make(Expr::Node::add, e, product());
            else if (accept('-')) e = make(Expr::Node::sub, e, product());
            else return e;
        }
    }

    NodePtr product() {
        NodePtr e = unary();
        for (;;) {
            if (accept('*')) e = make(Expr::Node::mul, e, unary());
            else if (accept('/')) e = make(Expr::Node::div, e, unary());
            else return e;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Expr::Node::neg, unary());
        if (accept('+')) return unary();
        return primary();
    }

    NodePtr primary() {
        skip();
        if (i_ >= s_.size()) error("unexpected end");
        if (accept('(')) {
            NodePtr e = sum();
            if (!accept(')')) error("expected ')'");
            return e;
        }
        const char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + i_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) error("malformed number");
            i_ += static_cast<std::size_t>(end - begin);
            return make(Expr::Node::number, nullptr, nullptr, v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = i_;
            while (i_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[i_]))) ++i_;
            const std::string id = s_.substr(start, i_ - start);
            if (id == "t") return make(Expr::Node::var_t);
            if (id == "x" || id == "x1") return make(Expr::Node::var_x1);
            if (id == "x2") return make(Expr::Node::var_x2);
            Expr::Node::Kind fn;
            if (id == "sin") fn = Expr::Node::fn_sin;
            else if (id == "cos") fn = Expr::Node::fn_cos;
            else if (id == "exp") fn = Expr::Node::fn_exp;
            else {
                i_ = start;
                error("unknown name '" + id + "'");
            }
            if (!accept('(')) error("expected '(' after " + id);
            NodePtr arg = sum();
            if (!accept(')')) error("expected ')'");
            return make(fn, arg);
        }
        error("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    std::size_t i_ = 0;
};

std::string type_name(const json& j) { return j.type_name(); }

}  // namespace

Expr Expr::parse(const std::string& text) {
    Expr e;
    e.root_ = Parser(text).parse();
    e.text_ = text;
    return e;
}

Expr Expr::constant(double c) {
    Expr e;
    e.root_ = make(Node::number, nullptr, nullptr, c);
    json j = c;
    e.text_ = j.dump();
    return e;
}

double Expr::operator()(double t, const Point& x) const { return root_->eval(t, x[0], x[1]); }

JetD Expr::operator()(const JetD& t, const JetD& x1, const JetD& x2) const { return root_->eval(t, x1, x2); }

Field Expr::at_time(double t) const {
    auto root = root_;
    return [root, t](const Point& x) { return root->eval(t, x[0], x[1]); };
}

JetField Expr::jet() const {
    auto root = root_;
    return [root](const JetD& t, const JetD& x1, const JetD& x2) { return root->eval(t, x1, x2); };
}

Section::Section(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) fail("field '" + (path_.empty() ? std::string("<root>") : path_) + "': expected object");
}

std::string Section::field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool Section::has(const std::string& key) const { return j_->contains(key); }

const json& Section::value(const std::string& key) const { return at(key); }

const json& Section::at(const std::string& key) const {
    if (!j_->contains(key)) fail("field '" + field(key) + "': missing");
    used_.insert(key);
    return (*j_)[key];
}

double Section::number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail("field '" + field(key) + "': expected number, got " + type_name(v));
    return v.get<double>();
}

double Section::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

int Section::integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail("field '" + field(key) + "': expected integer, got " + type_name(v));
    return v.get<int>();
}

int Section::integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

std::uint64_t Section::unsigned_integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail("field '" + field(key) + "': expected nonnegative integer");
    return v.get<std::uint64_t>();
}

bool Section::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) fail("field '" + field(key) + "': expected boolean, got " + type_name(v));
    return v.get<bool>();
}

std::string Section::string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail("field '" + field(key) + "': expected string, got " + type_name(v));
    return v.get<std::string>();
}

std::string Section::string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

std::vector<double> Section::numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) fail("field '" + field(key) + "': expected array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) fail("field '" + field(key) + "': expected array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<int> Section::integers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) fail("field '" + field(key) + "': expected array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) fail("field '" + field(key) + "': expected array of integers");
        out.push_back(e.get<int>());
    }
    return out;
}

Expr Section::expr(const std::string& key) const {
    const json& v = at(key);
    if (v.is_number()) return Expr::constant(v.get<double>());
    if (!v.is_string()) fail("field '" + field(key) + "': expected number or expression string");
    try {
        return Expr::parse(v.get<std::string>());
    } catch (const Error& e) {
        fail("field '" + field(key) + "': " + e.what());
    }
}

std::optional<Expr> Section::optional_expr(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return expr(key);
}

Section Section::child(const std::string& key) const {
    const json& v = at(key);
    return Section(v, field(key));
}

std::optional<Section> Section::optional_child(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return child(key);
}

std::vector<Section> Section::children(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) fail("field '" + field(key) + "': expected array of objects");
    std::vector<Section> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], field(key) + "[" + std::to_string(i) + "]");
    return out;
}

void Section::finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
        if (!used_.count(it.key())) fail("field '" + field(it.key()) + "': unknown field");
}

json parse_config(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        fail("config line " + std::to_string(line) + ", column " + std::to_string(col) + ": malformed JSON");
    }
}

GridSpec read_grid(const Section& s) {
    GridSpec g;
    g.dim = s.integer("dim", 1);
    require(g.dim == 1 || g.dim == 2, "field '" + s.path() + ".dim': must be 1 or 2");
    if (s.has("length")) {
        const auto L = s.numbers("length");
        require(L.size() == 1 || L.size() == 2, "field '" + s.path() + ".length': expected 1 or 2 entries");
        g.length = {L[0], L.size() > 1 ? L[1] : 1.0};
    }
    const auto n = s.integers("nodes");
    require(n.size() == 1 || n.size() == 2, "field '" + s.path() + ".nodes': expected 1 or 2 entries");
    g.nodes = {n[0], n.size() > 1 ? n[1] : 1};
    if (s.has("gamma0"))
        for (const Section& f : s.children("gamma0")) {
            Face face;
            face.axis = f.integer("axis");
            face.side = f.integer("side");
            f.finish();
            g.gamma0.push_back(face);
        }
    if (s.has("g0"))
        for (const Section& b : s.children("g0")) {
            const auto lo = b.numbers("lo"), hi = b.numbers("hi");
            require(lo.size() == 2 && hi.size() == 2, "field '" + b.path() + "': lo and hi need 2 entries");
            b.finish();
            g.g0.push_back({{lo[0], lo[1]}, {hi[0], hi[1]}});
        }
    s.finish();
    return g;
}

TimeGrid read_time(const Section& s) {
    const double T = s.number("T");
    const int steps = s.integer("steps");
    s.finish();
    require(T > 0.0, "field '" + s.path() + ".T': must be positive");
    require(steps >= 1, "field '" + s.path() + ".steps': must be positive");
    return TimeGrid(T, steps);
}

NoiseSpec read_noise(const Section& s) {
    NoiseSpec n;
    const std::string shape = s.string("shape", "white");
    if (shape == "white") n.shape = NoiseShape::white;
    else if (shape == "single_mode") n.shape = NoiseShape::single_mode;
    else fail("field '" + s.path() + ".shape': expected white or single_mode");
    n.mode = s.integer("mode", 1);
    s.finish();
    return n;
}

NormKind read_norm(const std::string& field, const std::string& name) {
    if (name == "L2") return NormKind::L2_space;
    if (name == "H1") return NormKind::H1_space;
    if (name == "H2") return NormKind::H2_space;
    fail("field '" + field + "': expected L2, H1 or H2");
}

ParabolicExprs read_parabolic(const Section& s) {
    ParabolicExprs e;
    e.b = s.optional_expr("b");
    e.b1x = s.optional_expr("b1x");
    e.b1y = s.optional_expr("b1y");
    e.b2 = s.optional_expr("b2");
    e.b3 = s.optional_expr("b3");
    e.f = s.optional_expr("f");
    e.g = s.optional_expr("g");
    e.y0 = s.optional_expr("y0");
    s.finish();
    return e;
}

HyperbolicExprs read_hyperbolic(const Section& s) {
    HyperbolicExprs e;
    e.b = s.optional_expr("b");
    e.b1 = s.optional_expr("b1");
    e.b2x = s.optional_expr("b2x");
    e.b2y = s.optional_expr("b2y");
    e.b3 = s.optional_expr("b3");
    e.b4 = s.optional_expr("b4");
    e.f = s.optional_expr("f");
    e.g = s.optional_expr("g");
    e.z0 = s.optional_expr("z0");
    e.z1 = s.optional_expr("z1");
    s.finish();
    return e;
}

namespace {

Field field_of(const std::optional<Expr>& e) { return e ? e->at_time(0.0) : Field(); }

}  // namespace

ParabolicFields fields_of(const ParabolicExprs& e) {
    ParabolicFields f;
    f.diffusion = field_of(e.b);
    f.drift = {field_of(e.b1x), field_of(e.b1y)};
    f.reaction = field_of(e.b2);
    f.noise = field_of(e.b3);
    return f;
}

HyperbolicFields fields_of(const HyperbolicExprs& e) {
    HyperbolicFields f;
    f.diffusion = field_of(e.b);
    f.damping = field_of(e.b1);
    f.drift = {field_of(e.b2x), field_of(e.b2y)};
    f.reaction = field_of(e.b3);
    f.noise = field_of(e.b4);
    return f;
}

Mat sample_source(const Expr& e, const Grid& grid, const TimeGrid& time) {
    Mat m(grid.size(), time.steps);
    for (int k = 0; k < time.steps; ++k) m.col(k) = sample(grid, e.at_time(time.t(k)));
    return m;
}

ParabolicCoefficients sample_parabolic(const ParabolicExprs& e, const Grid& grid, const TimeGrid& time) {
    ParabolicCoefficients c = fields_of(e).sample(grid);
    if (e.f) c.f = sample_source(*e.f, grid, time);
    if (e.g) c.g = sample_source(*e.g, grid, time);
    c.y0 = e.y0 ? sample(grid, e.y0->at_time(0.0)) : Vec::Zero(grid.size());
    return c;
}

HyperbolicCoefficients sample_hyperbolic(const HyperbolicExprs& e, const Grid& grid, const TimeGrid& time) {
    HyperbolicCoefficients c = fields_of(e).sample(grid);
    if (e.f) c.f = sample_source(*e.f, grid, time);
    if (e.g) c.g = sample_source(*e.g, grid, time);
    c.z0 = e.z0 ? sample(grid, e.z0->at_time(0.0)) : Vec::Zero(grid.size());
    c.z1 = e.z1 ? sample(grid, e.z1->at_time(0.0)) : Vec::Zero(grid.size());
    return c;
}

TensorField read_tensor(const Section& s, const std::string& key) {
    if (!s.has(key)) return TensorField::scalar(1.0);
    if (!s.value(key).is_object()) {
        const JetField e = s.expr(key).jet();
        TensorField t;
        t.b11 = e;
        t.b22 = e;
        t.b12 = constant_field(0.0);
        return t;
    }
    const Section obj = s.child(key);
    TensorField t;
    t.b11 = obj.expr("b11").jet();
    t.b22 = obj.has("b22") ? obj.expr("b22").jet() : t.b11;
    t.b12 = obj.has("b12") ? obj.expr("b12").jet() : constant_field(0.0);
    obj.finish();
    return t;
}

std::uint64_t config_hash(const json& j) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace spde::cli
