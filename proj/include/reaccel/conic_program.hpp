#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace reaccel {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarId {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

/// Sparse affine expression sum_i coeff_i * x_i + constant.
struct LinExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinExpr() = default;
    LinExpr(double c) : constant(c) {}  // NOLINT: implicit by design
    LinExpr(VarId v, double coeff = 1.0) { terms.emplace_back(v.idx, coeff); }

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(double s);
    /// Merge duplicate variables and drop zero coefficients.
    void compress();
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);

enum class RowSense { Eq, Le, Ge };

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter, Fatal };

/// Mixed-integer second-order-cone program in builder form: bounded
/// continuous variables, binaries, linear rows, cone memberships
/// ||head|| <= tail over affine expressions, SOS2 sets over lambda
/// variables, and a linear objective (minimized).
class ConicProgram {
  public:
    struct Var {
        std::string name;
        double lb = -kInf, ub = kInf;
        bool is_binary = false;
    };
    struct Row {
        LinExpr expr;  // expr (sense) 0
        RowSense sense = RowSense::Eq;
        std::string tag;
    };
    struct Cone {
        LinExpr tail;
        std::vector<LinExpr> head;
        std::string tag;
    };
    struct Sos2 {
        std::vector<int> vars;  // ordered lambda variable indices
        std::string tag;
    };

    VarId add_var(const std::string& name, double lb, double ub);
    VarId add_binary(const std::string& name);
    /// expr (sense) 0, e.g. add_row(x - 3.0, RowSense::Le, "cap") means x <= 3.
    void add_row(LinExpr expr, RowSense sense, std::string tag);
    void add_cone(LinExpr tail, std::vector<LinExpr> head, std::string tag);
    void add_sos2(std::vector<int> vars, std::string tag);
    void add_objective(const LinExpr& term);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    int num_cones() const { return static_cast<int>(cones_.size()); }
    int num_sos2() const { return static_cast<int>(sos2_.size()); }
    int num_binaries() const;
    int rows_tagged(const std::string& prefix) const;

    const std::vector<Var>& vars() const { return vars_; }
    const std::vector<Row>& rows() const { return rows_; }
    const std::vector<Cone>& cones() const { return cones_; }
    const std::vector<Sos2>& sos2_sets() const { return sos2_; }
    const LinExpr& objective() const { return objective_; }
    const Var& var(VarId v) const { return vars_[v.idx]; }

    double eval(const LinExpr& e, const std::vector<double>& x) const;
    double objective_value(const std::vector<double>& x) const;
    /// Largest row/cone/bound violation of x, for decode-time auditing.
    double max_violation(const std::vector<double>& x, std::string* worst_tag = nullptr) const;

    /// Plain-text standard form with 17-significant-digit decimals, for
    /// cross-checking against external solvers.
    void dump(std::ostream& os) const;

  private:
    std::vector<Var> vars_;
    std::vector<Row> rows_;
    std::vector<Cone> cones_;
    std::vector<Sos2> sos2_;
    LinExpr objective_;
};

}  // namespace reaccel
