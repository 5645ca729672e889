#include "lentil/field.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "lentil/error.hpp"

namespace lentil {

Jet2 operator+(const Jet2& a, const Jet2& b)
{
    return {a.v + b.v, a.dx + b.dx, a.dy + b.dy, a.dxx + b.dxx, a.dxy + b.dxy, a.dyy + b.dyy};
}

Jet2 operator-(const Jet2& a, const Jet2& b)
{
    return {a.v - b.v, a.dx - b.dx, a.dy - b.dy, a.dxx - b.dxx, a.dxy - b.dxy, a.dyy - b.dyy};
}

Jet2 operator-(const Jet2& a) { return {-a.v, -a.dx, -a.dy, -a.dxx, -a.dxy, -a.dyy}; }

Jet2 operator*(const Jet2& a, const Jet2& b)
{
    return {a.v * b.v,
            a.dx * b.v + a.v * b.dx,
            a.dy * b.v + a.v * b.dy,
            a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx,
            a.dxy * b.v + a.dx * b.dy + a.dy * b.dx + a.v * b.dxy,
            a.dyy * b.v + 2.0 * a.dy * b.dy + a.v * b.dyy};
}

Jet2 compose(const Jet2& a, double f0, double f1, double f2)
{
    return {f0,
            f1 * a.dx,
            f1 * a.dy,
            f2 * a.dx * a.dx + f1 * a.dxx,
            f2 * a.dx * a.dy + f1 * a.dxy,
            f2 * a.dy * a.dy + f1 * a.dyy};
}

Jet2 operator/(const Jet2& a, const Jet2& b)
{
    const double v = b.v;
    return a * compose(b, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
}

namespace {

//---------------------------------------------------------------------------//
// Constant curvature

class ConstantCurvatureSpeed final : public SpeedField
{
  public:
    explicit ConstantCurvatureSpeed(double kappa) : kappa_(kappa) {}

    Jet2 eval(Vec2 p) const override
    {
        const double h = 0.5 * kappa_;
        return {0.5 + h * norm2(p), 2.0 * h * p.x, 2.0 * h * p.y, 2.0 * h, 0.0, 2.0 * h};
    }
    nlohmann::json to_json() const override
    {
        return {{"constant_curvature", kappa_}};
    }
    bool is_radial() const override { return true; }

  private:
    double kappa_;
};

//---------------------------------------------------------------------------//
// Expressions

struct Node
{
    enum class Kind { number, var_x, var_y, var_r, var_r2, add, sub, mul, div, pow, neg, func };
    Kind kind = Kind::number;
    double number = 0.0;
    std::string func;
    std::vector<Node> args;
};

class Parser
{
  public:
    explicit Parser(const std::string& s) : s_(s) {}

    Node parse()
    {
        Node n = expr();
        skip_ws();
        if (pos_ != s_.size())
            error("unexpected trailing input");
        return n;
    }

  private:
    [[noreturn]] void error(const std::string& msg) const
    {
        fail(ErrorCode::parse,
             "speed expression '" + s_ + "': " + msg + " at offset " + std::to_string(pos_));
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c)
        {
            ++pos_;
            return true;
        }
        return false;
    }

    static Node binary(Node::Kind k, Node a, Node b)
    {
        Node n;
        n.kind = k;
        n.args.push_back(std::move(a));
        n.args.push_back(std::move(b));
        return n;
    }

    Node expr()
    {
        Node lhs = term();
        for (;;)
        {
            if (accept('+'))
                lhs = binary(Node::Kind::add, std::move(lhs), term());
            else if (accept('-'))
                lhs = binary(Node::Kind::sub, std::move(lhs), term());
            else
                return lhs;
        }
    }

    Node term()
    {
        Node lhs = unary();
        for (;;)
        {
            if (accept('*'))
                lhs = binary(Node::Kind::mul, std::move(lhs), unary());
            else if (accept('/'))
                lhs = binary(Node::Kind::div, std::move(lhs), unary());
            else
                return lhs;
        }
    }

    Node unary()
    {
        if (accept('-'))
        {
            Node n;
            n.kind = Node::Kind::neg;
            n.args.push_back(unary());
            return n;
        }
        if (accept('+'))
            return unary();
        Node base = primary();
        if (accept('^'))
            return binary(Node::Kind::pow, std::move(base), unary());
        return base;
    }

    Node primary()
    {
        skip_ws();
        if (pos_ >= s_.size())
            error("unexpected end of input");
        if (accept('('))
        {
            Node n = expr();
            if (!accept(')'))
                error("expected ')'");
            return n;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
        {
            std::size_t used = 0;
            double v = 0.0;
            try
            {
                v = std::stod(s_.substr(pos_), &used);
            }
            catch (const std::exception&)
            {
                error("bad number");
            }
            pos_ += used;
            Node n;
            n.number = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)))
        {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            std::string id = s_.substr(start, pos_ - start);
            Node n;
            if (id == "x")
                n.kind = Node::Kind::var_x;
            else if (id == "y")
                n.kind = Node::Kind::var_y;
            else if (id == "r")
                n.kind = Node::Kind::var_r;
            else if (id == "r2")
                n.kind = Node::Kind::var_r2;
            else if (id == "pi")
                n.number = pi;
            else
            {
                static const std::array<const char*, 10> known = {
                    "sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan"};
                if (std::find_if(known.begin(), known.end(), [&](const char* k) { return id == k; }) == known.end())
                    error("unknown identifier '" + id + "'");
                if (!accept('('))
                    error("expected '(' after " + id);
                n.kind = Node::Kind::func;
                n.func = id;
                n.args.push_back(expr());
                if (!accept(')'))
                    error("expected ')'");
            }
            return n;
        }
        error(std::string("unexpected character '") + c + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

Jet2 apply_function(const std::string& f, const Jet2& a)
{
    const double v = a.v;
    if (f == "sin")
        return compose(a, std::sin(v), std::cos(v), -std::sin(v));
    if (f == "cos")
        return compose(a, std::cos(v), -std::sin(v), -std::cos(v));
    if (f == "tan")
    {
        const double t = std::tan(v), s2 = 1.0 + t * t;
        return compose(a, t, s2, 2.0 * t * s2);
    }
    if (f == "exp")
    {
        const double e = std::exp(v);
        return compose(a, e, e, e);
    }
    if (f == "log")
        return compose(a, std::log(v), 1.0 / v, -1.0 / (v * v));
    if (f == "sqrt")
    {
        const double s = std::sqrt(v);
        return compose(a, s, 0.5 / s, -0.25 / (s * v));
    }
    if (f == "sinh")
        return compose(a, std::sinh(v), std::cosh(v), std::sinh(v));
    if (f == "cosh")
        return compose(a, std::cosh(v), std::sinh(v), std::cosh(v));
    if (f == "tanh")
    {
        const double t = std::tanh(v), s2 = 1.0 - t * t;
        return compose(a, t, s2, -2.0 * t * s2);
    }
    // atan
    const double d = 1.0 / (1.0 + v * v);
    return compose(a, std::atan(v), d, -2.0 * v * d * d);
}

Jet2 evaluate(const Node& n, Vec2 p)
{
    switch (n.kind)
    {
        case Node::Kind::number: return Jet2::constant(n.number);
        case Node::Kind::var_x: return Jet2::var_x(p.x);
        case Node::Kind::var_y: return Jet2::var_y(p.y);
        case Node::Kind::var_r2: return {norm2(p), 2 * p.x, 2 * p.y, 2, 0, 2};
        case Node::Kind::var_r:
        {
            Jet2 r2{norm2(p), 2 * p.x, 2 * p.y, 2, 0, 2};
            return apply_function("sqrt", r2);
        }
        case Node::Kind::add: return evaluate(n.args[0], p) + evaluate(n.args[1], p);
        case Node::Kind::sub: return evaluate(n.args[0], p) - evaluate(n.args[1], p);
        case Node::Kind::mul: return evaluate(n.args[0], p) * evaluate(n.args[1], p);
        case Node::Kind::div: return evaluate(n.args[0], p) / evaluate(n.args[1], p);
        case Node::Kind::neg: return -evaluate(n.args[0], p);
        case Node::Kind::func: return apply_function(n.func, evaluate(n.args[0], p));
        case Node::Kind::pow:
        {
            const Jet2 base = evaluate(n.args[0], p);
            const Node& e = n.args[1];
            if (e.kind == Node::Kind::number)
            {
                const double q = e.number;
                const double v = base.v;
                return compose(base, std::pow(v, q), q * std::pow(v, q - 1.0),
                               q * (q - 1.0) * std::pow(v, q - 2.0));
            }
            const Jet2 ex = evaluate(e, p);
            return apply_function("exp", ex * apply_function("log", base));
        }
    }
    return {};
}

bool mentions_xy(const Node& n)
{
    if (n.kind == Node::Kind::var_x || n.kind == Node::Kind::var_y)
        return true;
    return std::any_of(n.args.begin(), n.args.end(), mentions_xy);
}

class ExpressionSpeed final : public SpeedField
{
  public:
    explicit ExpressionSpeed(std::string text) : text_(std::move(text)), root_(Parser(text_).parse())
    {
        radial_ = !mentions_xy(root_);
    }
    Jet2 eval(Vec2 p) const override { return evaluate(root_, p); }
    nlohmann::json to_json() const override { return {{"expression", text_}}; }
    bool is_radial() const override { return radial_; }

  private:
    std::string text_;
    Node root_;
    bool radial_ = false;
};

//---------------------------------------------------------------------------//
// Gridded speed

struct CubicWeights
{
    std::array<double, 4> w, dw, ddw;
};

CubicWeights catmull_rom(double t)
{
    const double t2 = t * t, t3 = t2 * t;
    return {{0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t),
             0.5 * (t3 - t2)},
            {0.5 * (-3 * t2 + 4 * t - 1), 0.5 * (9 * t2 - 10 * t), 0.5 * (-9 * t2 + 8 * t + 1),
             0.5 * (3 * t2 - 2 * t)},
            {0.5 * (-6 * t + 4), 0.5 * (18 * t - 10), 0.5 * (-18 * t + 8), 0.5 * (6 * t - 2)}};
}

class GridSpeed final : public SpeedField
{
  public:
    GridSpeed(int n, double extent, std::vector<double> values)
        : n_(n), extent_(extent), values_(std::move(values))
    {
        require(n_ >= 4, ErrorCode::invalid_argument, "speed grid needs n >= 4");
        require(extent_ > 0, ErrorCode::invalid_argument, "speed grid extent must be positive");
        require(values_.size() == static_cast<std::size_t>(n_) * n_, ErrorCode::invalid_argument,
                "speed grid has " + std::to_string(values_.size()) + " values, expected n*n");
        for (double v : values_)
            require(std::isfinite(v) && v > 0, ErrorCode::constraint, "speed grid values must be positive");
        step_ = 2.0 * extent_ / (n_ - 1);
    }

    Jet2 eval(Vec2 p) const override
    {
        const double gx = (p.x + extent_) / step_, gy = (p.y + extent_) / step_;
        const int ix = std::clamp(static_cast<int>(std::floor(gx)), 0, n_ - 2);
        const int iy = std::clamp(static_cast<int>(std::floor(gy)), 0, n_ - 2);
        const CubicWeights wx = catmull_rom(gx - ix), wy = catmull_rom(gy - iy);
        Jet2 out;
        for (int b = 0; b < 4; ++b)
        {
            const int yy = std::clamp(iy - 1 + b, 0, n_ - 1);
            for (int a = 0; a < 4; ++a)
            {
                const int xx = std::clamp(ix - 1 + a, 0, n_ - 1);
                const double f = values_[static_cast<std::size_t>(yy) * n_ + xx];
                out.v += wx.w[a] * wy.w[b] * f;
                out.dx += wx.dw[a] * wy.w[b] * f;
                out.dy += wx.w[a] * wy.dw[b] * f;
                out.dxx += wx.ddw[a] * wy.w[b] * f;
                out.dxy += wx.dw[a] * wy.dw[b] * f;
                out.dyy += wx.w[a] * wy.ddw[b] * f;
            }
        }
        const double s = 1.0 / step_;
        out.dx *= s;
        out.dy *= s;
        out.dxx *= s * s;
        out.dxy *= s * s;
        out.dyy *= s * s;
        return out;
    }

    nlohmann::json to_json() const override
    {
        return {{"grid", {{"n", n_}, {"extent", extent_}, {"values", values_}}}};
    }

  private:
    int n_;
    double extent_;
    std::vector<double> values_;
    double step_ = 1.0;
};

}  // namespace

SpeedFieldPtr make_constant_curvature_speed(double kappa)
{
    return std::make_shared<ConstantCurvatureSpeed>(kappa);
}

SpeedFieldPtr make_expression_speed(const std::string& expression)
{
    return std::make_shared<ExpressionSpeed>(expression);
}

SpeedFieldPtr make_grid_speed(int n, double extent, std::vector<double> values)
{
    return std::make_shared<GridSpeed>(n, extent, std::move(values));
}

SpeedFieldPtr speed_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        fail(ErrorCode::parse, "manifold config: field 'conformal' must be an object");
    if (j.contains("expression"))
    {
        if (!j["expression"].is_string())
            fail(ErrorCode::parse, "manifold config: field 'conformal.expression' must be a string");
        return make_expression_speed(j["expression"].get<std::string>());
    }
    if (j.contains("grid"))
    {
        const auto& g = j["grid"];
        if (!g.contains("n") || !g.contains("extent") || !g.contains("values"))
            fail(ErrorCode::parse, "manifold config: 'conformal.grid' needs n, extent, values");
        return make_grid_speed(g["n"].get<int>(), g["extent"].get<double>(),
                               g["values"].get<std::vector<double>>());
    }
    if (j.contains("constant_curvature"))
        return make_constant_curvature_speed(j["constant_curvature"].get<double>());
    fail(ErrorCode::parse, "manifold config: 'conformal' needs 'expression' or 'grid'");
}

}  // namespace lentil
