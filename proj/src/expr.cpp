#include "ridge/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>

namespace ridge {

namespace {

using Node = Expr::Node;
using NodePtr = Expr::NodePtr;
using Func = Expr::Func;
using Kind = Node::Kind;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->value = v;
    return n;
}

NodePtr make_var(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->name = std::move(name);
    return n;
}

NodePtr make_call(Func fn, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Call;
    n->fn = fn;
    n->a = std::move(a);
    return n;
}

bool is_const(const NodePtr& n, double v) {
    return n->kind == Kind::Const && n->value == v;
}

double checked_pow(double base, double expo);
double apply_func(Func fn, double v);

double checked_binary(char op, double l, double r) {
    double v = 0.0;
    switch (op) {
    case '+': v = l + r; break;
    case '-': v = l - r; break;
    case '*': v = l * r; break;
    case '/': v = l / r; break;
    case '^': return checked_pow(l, r);
    }
    if (!std::isfinite(v))
        raise(ErrorKind::EvalDomain,
              std::string("non-finite result of '") + op + "'");
    return v;
}

double checked_pow(double base, double expo) {
    if (base < 0.0 && expo != std::floor(expo))
        raise(ErrorKind::EvalDomain, "fractional power of negative base");
    const double v = std::pow(base, expo);
    if (!std::isfinite(v))
        raise(ErrorKind::EvalDomain, "non-finite result of '^'");
    return v;
}

double apply_func(Func fn, double v) {
    double r = 0.0;
    switch (fn) {
    case Func::Sin: r = std::sin(v); break;
    case Func::Cos: r = std::cos(v); break;
    case Func::Tan: r = std::tan(v); break;
    case Func::Exp: r = std::exp(v); break;
    case Func::Log:
        if (v <= 0.0)
            raise(ErrorKind::EvalDomain, "log of non-positive value " + fmt17(v));
        r = std::log(v);
        break;
    case Func::Sqrt:
        if (v < 0.0)
            raise(ErrorKind::EvalDomain, "sqrt of negative value " + fmt17(v));
        r = std::sqrt(v);
        break;
    case Func::Abs: r = std::fabs(v); break;
    }
    if (!std::isfinite(r))
        raise(ErrorKind::EvalDomain, "non-finite function result");
    return r;
}

// Folding builders keep derivative trees from exploding. Only identities
// that cannot change domain behavior are applied.
NodePtr make_binary(char op, NodePtr a, NodePtr b) {
    if (a->kind == Kind::Const && b->kind == Kind::Const)
        return make_const(checked_binary(op, a->value, b->value));
    switch (op) {
    case '+':
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
    case '-':
        if (is_const(b, 0.0)) return a;
        break;
    case '*':
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
    case '/':
        if (is_const(b, 1.0)) return a;
        break;
    case '^':
        if (is_const(b, 1.0)) return a;
        break;
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Binary;
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_neg(NodePtr a) {
    if (a->kind == Kind::Const)
        return make_const(-a->value);
    if (a->kind == Kind::Neg)
        return a->a;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Neg;
    n->a = std::move(a);
    return n;
}

const std::array<std::pair<const char*, Func>, 7> kFuncs{{
    {"sin", Func::Sin}, {"cos", Func::Cos}, {"tan", Func::Tan},
    {"exp", Func::Exp}, {"log", Func::Log}, {"sqrt", Func::Sqrt},
    {"abs", Func::Abs},
}};

const char* func_name(Func fn) {
    for (const auto& [name, f] : kFuncs)
        if (f == fn)
            return name;
    return "?";
}

// ---------------------------------------------------------------------------
// Parser: hand-rolled recursive descent over a token stream.

struct Token {
    enum class Kind { Number, Ident, Op, LParen, RParen, End } kind;
    std::string text;
    double value = 0.0;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_])))
            ++i_;
        tok_.pos = i_;
        if (i_ >= text_.size()) {
            tok_.kind = Token::Kind::End;
            tok_.text.clear();
            return;
        }
        const char c = text_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[i_ + 1])))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
                ++j;
            tok_.kind = Token::Kind::Ident;
            tok_.text.assign(text_.substr(i_, j - i_));
            i_ = j;
            return;
        }
        if (std::strchr("+-*/^", c)) {
            tok_.kind = Token::Kind::Op;
            tok_.text.assign(1, c);
            ++i_;
            return;
        }
        if (c == '(') {
            tok_.kind = Token::Kind::LParen;
            tok_.text = "(";
            ++i_;
            return;
        }
        if (c == ')') {
            tok_.kind = Token::Kind::RParen;
            tok_.text = ")";
            ++i_;
            return;
        }
        raise(ErrorKind::Syntax, "unexpected character '" + std::string(1, c) +
                                     "' at position " + std::to_string(i_));
    }

    void lex_number() {
        std::size_t j = i_;
        while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j])))
            ++j;
        if (j < text_.size() && text_[j] == '.') {
            ++j;
            while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j])))
                ++j;
        }
        if (j < text_.size() && (text_[j] == 'e' || text_[j] == 'E')) {
            std::size_t k = j + 1;
            if (k < text_.size() && (text_[k] == '+' || text_[k] == '-'))
                ++k;
            if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
                ++k;
                while (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k])))
                    ++k;
                j = k;
            }
        }
        tok_.kind = Token::Kind::Number;
        tok_.text.assign(text_.substr(i_, j - i_));
        tok_.value = std::strtod(tok_.text.c_str(), nullptr);
        i_ = j;
    }

    std::string_view text_;
    std::size_t i_ = 0;
    Token tok_;
};

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& vars)
        : lex_(text), vars_(vars) {}

    NodePtr parse() {
        NodePtr e = sum();
        const Token& t = lex_.peek();
        if (t.kind != Token::Kind::End)
            raise(ErrorKind::Syntax, "unexpected token '" + t.text +
                                         "' at position " + std::to_string(t.pos));
        return e;
    }

private:
    NodePtr sum() {
        NodePtr e = term();
        while (lex_.peek().kind == Token::Kind::Op &&
               (lex_.peek().text == "+" || lex_.peek().text == "-")) {
            const char op = lex_.take().text[0];
            e = make_binary(op, e, term());
        }
        return e;
    }

    NodePtr term() {
        NodePtr e = unary();
        while (lex_.peek().kind == Token::Kind::Op &&
               (lex_.peek().text == "*" || lex_.peek().text == "/")) {
            const char op = lex_.take().text[0];
            e = make_binary(op, e, unary());
        }
        return e;
    }

    NodePtr unary() {
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::Op && t.text == "-") {
            lex_.take();
            return make_neg(unary());
        }
        if (t.kind == Token::Kind::Op && t.text == "+") {
            lex_.take();
            return unary();
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "^") {
            lex_.take();
            return make_binary('^', base, unary()); // right-associative
        }
        return base;
    }

    NodePtr atom() {
        Token t = lex_.take();
        switch (t.kind) {
        case Token::Kind::Number:
            return make_const(t.value);
        case Token::Kind::LParen: {
            NodePtr e = sum();
            expect_rparen();
            return e;
        }
        case Token::Kind::Ident:
            return ident(std::move(t));
        default:
            raise(ErrorKind::Syntax, "unexpected token '" + t.text +
                                         "' at position " + std::to_string(t.pos));
        }
    }

    NodePtr ident(Token t) {
        if (lex_.peek().kind == Token::Kind::LParen) {
            for (const auto& [name, fn] : kFuncs) {
                if (t.text == name) {
                    lex_.take(); // (
                    NodePtr arg = sum();
                    expect_rparen();
                    return make_call(fn, std::move(arg));
                }
            }
            raise(ErrorKind::UnknownFunction, "unknown function '" + t.text +
                                                  "' at position " + std::to_string(t.pos));
        }
        if (t.text == "pi")
            return make_const(M_PI);
        if (t.text == "e")
            return make_const(M_E);
        if (std::find(vars_.begin(), vars_.end(), t.text) != vars_.end())
            return make_var(t.text);
        raise(ErrorKind::UnknownIdentifier, "unknown identifier '" + t.text +
                                                "' at position " + std::to_string(t.pos));
    }

    void expect_rparen() {
        Token t = lex_.take();
        if (t.kind != Token::Kind::RParen)
            raise(ErrorKind::Syntax, "expected ')' at position " + std::to_string(t.pos));
    }

    Lexer lex_;
    const std::vector<std::string>& vars_;
};

// ---------------------------------------------------------------------------

double eval_node(const Node& n,
                 std::span<const std::pair<std::string_view, double>> bindings) {
    switch (n.kind) {
    case Kind::Const:
        return n.value;
    case Kind::Var:
        for (const auto& [name, v] : bindings)
            if (name == n.name)
                return v;
        raise(ErrorKind::MissingBinding, "no binding for variable '" + n.name + "'");
    case Kind::Neg:
        return -eval_node(*n.a, bindings);
    case Kind::Binary:
        return checked_binary(n.op, eval_node(*n.a, bindings), eval_node(*n.b, bindings));
    case Kind::Call:
        return apply_func(n.fn, eval_node(*n.a, bindings));
    }
    raise(ErrorKind::Internal, "corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, std::string_view var) {
    switch (n->kind) {
    case Kind::Const:
        return make_const(0.0);
    case Kind::Var:
        return make_const(n->name == var ? 1.0 : 0.0);
    case Kind::Neg:
        return make_neg(diff_node(n->a, var));
    case Kind::Binary: {
        const NodePtr da = diff_node(n->a, var);
        const NodePtr db = diff_node(n->b, var);
        switch (n->op) {
        case '+': return make_binary('+', da, db);
        case '-': return make_binary('-', da, db);
        case '*':
            return make_binary('+', make_binary('*', da, n->b),
                               make_binary('*', n->a, db));
        case '/':
            // (da*b - a*db) / b^2
            return make_binary('/',
                               make_binary('-', make_binary('*', da, n->b),
                                           make_binary('*', n->a, db)),
                               make_binary('^', n->b, make_const(2.0)));
        case '^':
            if (n->b->kind == Kind::Const) {
                const double c = n->b->value;
                // c * a^(c-1) * da
                return make_binary('*',
                                   make_binary('*', make_const(c),
                                               make_binary('^', n->a, make_const(c - 1.0))),
                                   da);
            }
            // a^b * (db*log(a) + b*da/a)
            return make_binary('*', n,
                               make_binary('+',
                                           make_binary('*', db, make_call(Func::Log, n->a)),
                                           make_binary('/', make_binary('*', n->b, da), n->a)));
        }
        raise(ErrorKind::Internal, "corrupt binary op");
    }
    case Kind::Call: {
        const NodePtr da = diff_node(n->a, var);
        NodePtr outer;
        switch (n->fn) {
        case Func::Sin: outer = make_call(Func::Cos, n->a); break;
        case Func::Cos: outer = make_neg(make_call(Func::Sin, n->a)); break;
        case Func::Tan:
            outer = make_binary('+', make_const(1.0),
                                make_binary('^', make_call(Func::Tan, n->a), make_const(2.0)));
            break;
        case Func::Exp: outer = make_call(Func::Exp, n->a); break;
        case Func::Log: outer = make_binary('/', make_const(1.0), n->a); break;
        case Func::Sqrt:
            outer = make_binary('/', make_const(0.5), make_call(Func::Sqrt, n->a));
            break;
        case Func::Abs:
            // sign(u)*u' written as u/abs(u)*u'; faults at u = 0
            outer = make_binary('/', n->a, make_call(Func::Abs, n->a));
            break;
        }
        return make_binary('*', outer, da);
    }
    }
    raise(ErrorKind::Internal, "corrupt expression node");
}

NodePtr simplify_node(const NodePtr& n) {
    switch (n->kind) {
    case Kind::Const:
    case Kind::Var:
        return n;
    case Kind::Neg:
        return make_neg(simplify_node(n->a));
    case Kind::Binary:
        return make_binary(n->op, simplify_node(n->a), simplify_node(n->b));
    case Kind::Call: {
        NodePtr a = simplify_node(n->a);
        if (a->kind == Kind::Const)
            return make_const(apply_func(n->fn, a->value));
        return make_call(n->fn, std::move(a));
    }
    }
    raise(ErrorKind::Internal, "corrupt expression node");
}

int precedence(const Node& n) {
    switch (n.kind) {
    case Kind::Const:
        return n.value < 0.0 ? 2 : 5; // negative constants print with '-'
    case Kind::Var:
    case Kind::Call:
        return 5;
    case Kind::Neg:
        return 2;
    case Kind::Binary:
        switch (n.op) {
        case '+': case '-': return 1;
        case '*': case '/': return 3;
        case '^': return 4;
        }
        return 0;
    }
    return 0;
}

void serialize_node(const Node& n, std::string& out) {
    auto child = [&out](const Node& c, bool parens) {
        if (parens) {
            out += '(';
            serialize_node(c, out);
            out += ')';
        } else {
            serialize_node(c, out);
        }
    };
    switch (n.kind) {
    case Kind::Const:
        out += fmt17(n.value);
        return;
    case Kind::Var:
        out += n.name;
        return;
    case Kind::Neg:
        out += '-';
        child(*n.a, precedence(*n.a) < 3);
        return;
    case Kind::Binary: {
        const int p = precedence(n);
        const int pa = precedence(*n.a);
        const int pb = precedence(*n.b);
        bool pa_parens, pb_parens;
        if (n.op == '^') {
            pa_parens = pa <= p;  // left operand of ^ binds tighter
            pb_parens = pb < p;   // right-associative
        } else {
            pa_parens = pa < p;
            pb_parens = (n.op == '-' || n.op == '/') ? pb <= p : pb < p;
        }
        child(*n.a, pa_parens);
        out += n.op;
        child(*n.b, pb_parens);
        return;
    }
    case Kind::Call:
        out += func_name(n.fn);
        out += '(';
        serialize_node(*n.a, out);
        out += ')';
        return;
    }
}

bool node_has_abs(const Node& n) {
    if (n.kind == Kind::Call && n.fn == Func::Abs)
        return true;
    if (n.a && node_has_abs(*n.a))
        return true;
    if (n.b && node_has_abs(*n.b))
        return true;
    return false;
}

NodePtr substitute_node(const NodePtr& n,
                        std::span<const std::pair<std::string, Expr>> subs) {
    switch (n->kind) {
    case Kind::Const:
        return n;
    case Kind::Var:
        for (const auto& [name, repl] : subs)
            if (name == n->name)
                return repl.root();
        raise(ErrorKind::MissingBinding,
              "no substitution for variable '" + n->name + "'");
    case Kind::Neg:
        return make_neg(substitute_node(n->a, subs));
    case Kind::Binary:
        return make_binary(n->op, substitute_node(n->a, subs), substitute_node(n->b, subs));
    case Kind::Call:
        return make_call(n->fn, substitute_node(n->a, subs));
    }
    raise(ErrorKind::Internal, "corrupt expression node");
}

} // namespace

Expr Expr::parse(std::string_view text, std::vector<std::string> allowed_vars) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        raise(ErrorKind::Syntax, "empty expression");
    Parser p(text, allowed_vars);
    NodePtr root = p.parse();
    return Expr(std::move(root), std::move(allowed_vars));
}

Expr Expr::constant(double v, std::vector<std::string> allowed_vars) {
    return Expr(make_const(v), std::move(allowed_vars));
}

Expr Expr::linear_combination(double c1, const Expr& a, double c2, const Expr& b) {
    // Zero coefficients drop their branch; this keeps derivative trees from
    // snowballing across cascade stages.
    if (c1 == 0.0 && c2 == 0.0)
        return Expr(make_const(0.0), a.vars_);
    if (c1 == 0.0)
        return Expr(make_binary('*', make_const(c2), b.root()), a.vars_);
    if (c2 == 0.0)
        return Expr(make_binary('*', make_const(c1), a.root()), a.vars_);
    NodePtr lhs = make_binary('*', make_const(c1), a.root());
    NodePtr rhs = make_binary('*', make_const(c2), b.root());
    return Expr(make_binary('+', std::move(lhs), std::move(rhs)), a.vars_);
}

double Expr::eval(std::span<const std::pair<std::string_view, double>> bindings) const {
    if (!root_)
        raise(ErrorKind::Internal, "empty expression");
    return eval_node(*root_, bindings);
}

double Expr::eval_xy(double x, double y) const {
    const std::pair<std::string_view, double> b[2] = {{"x", x}, {"y", y}};
    return eval(b);
}

Expr Expr::diff(std::string_view var) const {
    if (std::find(vars_.begin(), vars_.end(), var) == vars_.end())
        raise(ErrorKind::UnknownIdentifier,
              "cannot differentiate with respect to undeclared variable '" +
                  std::string(var) + "'");
    return Expr(diff_node(root_, var), vars_);
}

Expr Expr::simplified() const {
    return Expr(simplify_node(root_), vars_);
}

std::string Expr::serialize() const {
    std::string out;
    serialize_node(*root_, out);
    return out;
}

Expr Expr::substitute(std::span<const std::pair<std::string, Expr>> subs,
                      std::vector<std::string> new_vars) const {
    return Expr(substitute_node(root_, subs), std::move(new_vars));
}

bool Expr::has_abs() const {
    return root_ && node_has_abs(*root_);
}

// ---------------------------------------------------------------------------

CompiledExpr CompiledExpr::compile(const Expr& e, std::span<const std::string> var_order) {
    CompiledExpr out;
    int depth = 0;
    int max_depth = 0;
    const std::function<void(const Node&)> emit = [&](const Node& n) {
        switch (n.kind) {
        case Kind::Const:
            out.code_.push_back({Instr::Op::PushConst, n.value, 0});
            max_depth = std::max(max_depth, ++depth);
            return;
        case Kind::Var: {
            int slot = -1;
            for (std::size_t i = 0; i < var_order.size(); ++i)
                if (var_order[i] == n.name)
                    slot = static_cast<int>(i);
            if (slot < 0)
                raise(ErrorKind::MissingBinding,
                      "no slot for variable '" + n.name + "'");
            out.code_.push_back({Instr::Op::PushVar, 0.0, slot});
            max_depth = std::max(max_depth, ++depth);
            return;
        }
        case Kind::Neg:
            emit(*n.a);
            out.code_.push_back({Instr::Op::Neg, 0.0, 0});
            return;
        case Kind::Binary: {
            emit(*n.a);
            emit(*n.b);
            Instr::Op op;
            switch (n.op) {
            case '+': op = Instr::Op::Add; break;
            case '-': op = Instr::Op::Sub; break;
            case '*': op = Instr::Op::Mul; break;
            case '/': op = Instr::Op::Div; break;
            default: op = Instr::Op::Pow; break;
            }
            out.code_.push_back({op, 0.0, 0});
            --depth;
            return;
        }
        case Kind::Call: {
            emit(*n.a);
            Instr::Op op;
            switch (n.fn) {
            case Func::Sin: op = Instr::Op::Sin; break;
            case Func::Cos: op = Instr::Op::Cos; break;
            case Func::Tan: op = Instr::Op::Tan; break;
            case Func::Exp: op = Instr::Op::Exp; break;
            case Func::Log: op = Instr::Op::Log; break;
            case Func::Sqrt: op = Instr::Op::Sqrt; break;
            default: op = Instr::Op::Abs; break;
            }
            out.code_.push_back({op, 0.0, 0});
            return;
        }
        }
    };
    emit(*e.root());
    out.max_depth_ = max_depth;
    if (max_depth > 256)
        raise(ErrorKind::InputFormat, "expression nesting too deep");
    return out;
}

double CompiledExpr::eval(std::span<const double> var_values) const {
    double stack[256];
    int sp = 0;
    for (const Instr& ins : code_) {
        switch (ins.op) {
        case Instr::Op::PushConst: stack[sp++] = ins.value; break;
        case Instr::Op::PushVar: stack[sp++] = var_values[static_cast<std::size_t>(ins.slot)]; break;
        case Instr::Op::Add: --sp; stack[sp - 1] = checked_binary('+', stack[sp - 1], stack[sp]); break;
        case Instr::Op::Sub: --sp; stack[sp - 1] = checked_binary('-', stack[sp - 1], stack[sp]); break;
        case Instr::Op::Mul: --sp; stack[sp - 1] = checked_binary('*', stack[sp - 1], stack[sp]); break;
        case Instr::Op::Div: --sp; stack[sp - 1] = checked_binary('/', stack[sp - 1], stack[sp]); break;
        case Instr::Op::Pow: --sp; stack[sp - 1] = checked_pow(stack[sp - 1], stack[sp]); break;
        case Instr::Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
        case Instr::Op::Sin: stack[sp - 1] = apply_func(Func::Sin, stack[sp - 1]); break;
        case Instr::Op::Cos: stack[sp - 1] = apply_func(Func::Cos, stack[sp - 1]); break;
        case Instr::Op::Tan: stack[sp - 1] = apply_func(Func::Tan, stack[sp - 1]); break;
        case Instr::Op::Exp: stack[sp - 1] = apply_func(Func::Exp, stack[sp - 1]); break;
        case Instr::Op::Log: stack[sp - 1] = apply_func(Func::Log, stack[sp - 1]); break;
        case Instr::Op::Sqrt: stack[sp - 1] = apply_func(Func::Sqrt, stack[sp - 1]); break;
        case Instr::Op::Abs: stack[sp - 1] = apply_func(Func::Abs, stack[sp - 1]); break;
        }
    }
    return stack[0];
}

} // namespace ridge
