#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ridge/errors.hpp"

namespace ridge {

/// Immutable expression tree over declared real variables.
///
/// Grammar: conventional infix with +, -, *, /, ^ (right-associative),
/// unary minus, parentheses, and calls to sin, cos, tan, exp, log, sqrt,
/// abs. The constants pi and e are recognized identifiers. Whitespace is
/// insignificant. Evaluation is strict real arithmetic: any NaN or infinite
/// intermediate raises an error instead of propagating.
class Expr {
public:
    enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs };

    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    struct Node {
        enum class Kind { Const, Var, Neg, Binary, Call } kind;
        double value = 0.0;   // Const
        std::string name;     // Var
        char op = 0;          // Binary: one of + - * / ^
        Func fn = Func::Sin;  // Call
        NodePtr a, b;
    };

    Expr() = default;

    /// Parses `text` against the declared variable names. Errors carry the
    /// byte position of the offending token.
    static Expr parse(std::string_view text, std::vector<std::string> allowed_vars);

    /// Builds a constant expression (no variables beyond the declared set).
    static Expr constant(double v, std::vector<std::string> allowed_vars);

    /// c1*a + c2*b with constant folding; operands must share a variable set.
    static Expr linear_combination(double c1, const Expr& a, double c2, const Expr& b);

    const std::vector<std::string>& variables() const { return vars_; }
    const NodePtr& root() const { return root_; }
    bool empty() const { return root_ == nullptr; }

    /// Evaluates with one binding per declared variable (extra bindings are
    /// ignored, missing ones raise MissingBinding).
    double eval(std::span<const std::pair<std::string_view, double>> bindings) const;
    double eval_xy(double x, double y) const; // convenience for vars {x, y}

    /// Exact symbolic partial derivative with respect to `var`. The result
    /// shares the declared variable set. abs differentiates to u/abs(u)*u',
    /// which faults at u = 0; has_abs() flags the non-smooth case.
    Expr diff(std::string_view var) const;

    /// Best-effort simplification: constant folding and the safe identities
    /// u+0, u-0, u*1, u/1, u^1, double negation. Never required for
    /// correctness.
    Expr simplified() const;

    /// Infix text that parses back to an evaluation-identical tree.
    /// Numeric constants are printed with 17 significant digits.
    std::string serialize() const;

    /// Substitutes expression trees for variables (used to pull a function
    /// back through a linear change of coordinates). `subs` must cover every
    /// variable that occurs; the result takes its variable set from
    /// `new_vars`.
    Expr substitute(std::span<const std::pair<std::string, Expr>> subs,
                    std::vector<std::string> new_vars) const;

    bool has_abs() const;

private:
    Expr(NodePtr root, std::vector<std::string> vars)
        : root_(std::move(root)), vars_(std::move(vars)) {}

    NodePtr root_;
    std::vector<std::string> vars_;
};

/// Expression flattened to a postfix program for fast repeated evaluation.
/// Variable slots follow the order passed to compile(). Thread-safe: eval
/// uses only local state.
class CompiledExpr {
public:
    CompiledExpr() = default;
    static CompiledExpr compile(const Expr& e, std::span<const std::string> var_order);

    double eval(std::span<const double> var_values) const;
    bool valid() const { return !code_.empty(); }

private:
    struct Instr {
        enum class Op {
            PushConst, PushVar, Add, Sub, Mul, Div, Pow, Neg,
            Sin, Cos, Tan, Exp, Log, Sqrt, Abs,
        } op;
        double value = 0.0;
        int slot = 0;
    };
    std::vector<Instr> code_;
    int max_depth_ = 0;
};

} // namespace ridge
