#include "reaccel/conic_program.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

namespace reaccel {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    for (const auto& [v, c] : o.terms) terms.emplace_back(v, -c);
    constant -= o.constant;
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    for (auto& [v, c] : terms) c *= s;
    constant *= s;
    return *this;
}

void LinExpr::compress() {
    std::map<int, double> acc;
    for (const auto& [v, c] : terms) acc[v] += c;
    terms.clear();
    for (const auto& [v, c] : acc)
        if (c != 0.0) terms.emplace_back(v, c);
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }

VarId ConicProgram::add_var(const std::string& name, double lb, double ub) {
    if (lb > ub) throw std::invalid_argument("add_var: lb > ub for " + name);
    vars_.push_back({name, lb, ub, false});
    return {num_vars() - 1};
}

VarId ConicProgram::add_binary(const std::string& name) {
    vars_.push_back({name, 0.0, 1.0, true});
    return {num_vars() - 1};
}

void ConicProgram::add_row(LinExpr expr, RowSense sense, std::string tag) {
    expr.compress();
    rows_.push_back({std::move(expr), sense, std::move(tag)});
}

void ConicProgram::add_cone(LinExpr tail, std::vector<LinExpr> head, std::string tag) {
    if (head.empty()) throw std::invalid_argument("add_cone: empty head");
    tail.compress();
    for (auto& h : head) h.compress();
    cones_.push_back({std::move(tail), std::move(head), std::move(tag)});
}

void ConicProgram::add_sos2(std::vector<int> vars, std::string tag) {
    if (vars.size() < 2) throw std::invalid_argument("add_sos2: need at least 2 members");
    sos2_.push_back({std::move(vars), std::move(tag)});
}

void ConicProgram::add_objective(const LinExpr& term) {
    objective_ += term;
    objective_.compress();
}

int ConicProgram::num_binaries() const {
    return static_cast<int>(
        std::count_if(vars_.begin(), vars_.end(), [](const Var& v) { return v.is_binary; }));
}

int ConicProgram::rows_tagged(const std::string& prefix) const {
    return static_cast<int>(std::count_if(rows_.begin(), rows_.end(), [&](const Row& r) {
        return r.tag.compare(0, prefix.size(), prefix) == 0;
    }));
}

double ConicProgram::eval(const LinExpr& e, const std::vector<double>& x) const {
    double v = e.constant;
    for (const auto& [idx, c] : e.terms) v += c * x[idx];
    return v;
}

double ConicProgram::objective_value(const std::vector<double>& x) const {
    return eval(objective_, x);
}

double ConicProgram::max_violation(const std::vector<double>& x, std::string* worst_tag) const {
    double worst = 0.0;
    std::string tag;
    auto consider = [&](double viol, const std::string& t) {
        if (viol > worst) {
            worst = viol;
            tag = t;
        }
    };
    for (const Row& r : rows_) {
        const double v = eval(r.expr, x);
        double viol = 0.0;
        switch (r.sense) {
            case RowSense::Eq: viol = std::abs(v); break;
            case RowSense::Le: viol = std::max(0.0, v); break;
            case RowSense::Ge: viol = std::max(0.0, -v); break;
        }
        consider(viol, r.tag);
    }
    for (const Cone& c : cones_) {
        double nrm = 0.0;
        for (const LinExpr& h : c.head) {
            const double hv = eval(h, x);
            nrm += hv * hv;
        }
        consider(std::sqrt(nrm) - eval(c.tail, x), c.tag);
    }
    for (int i = 0; i < num_vars(); ++i) {
        consider(vars_[i].lb - x[i], "lb:" + vars_[i].name);
        consider(x[i] - vars_[i].ub, "ub:" + vars_[i].name);
    }
    if (worst_tag) *worst_tag = tag;
    return worst;
}

namespace {
std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
void put_expr(std::ostream& os, const LinExpr& e) {
    for (const auto& [v, c] : e.terms) os << " " << fmt17(c) << "*x" << v;
    if (e.constant != 0.0 || e.terms.empty()) os << " + " << fmt17(e.constant);
}
}  // namespace

void ConicProgram::dump(std::ostream& os) const {
    os << "conic-program 1\n";
    os << "vars " << num_vars() << "\n";
    for (int i = 0; i < num_vars(); ++i) {
        const Var& v = vars_[i];
        os << "x" << i << " " << v.name << " " << (v.is_binary ? "bin" : "cont") << " "
           << fmt17(v.lb) << " " << fmt17(v.ub) << "\n";
    }
    os << "objective";
    put_expr(os, objective_);
    os << "\n";
    os << "rows " << num_rows() << "\n";
    for (const Row& r : rows_) {
        os << (r.sense == RowSense::Eq ? "eq" : r.sense == RowSense::Le ? "le" : "ge");
        put_expr(os, r.expr);
        os << "  # " << r.tag << "\n";
    }
    os << "cones " << num_cones() << "\n";
    for (const Cone& c : cones_) {
        os << "soc " << c.head.size() + 1 << "  # " << c.tag << "\n";
        os << "  tail:";
        put_expr(os, c.tail);
        os << "\n";
        for (const LinExpr& h : c.head) {
            os << "  head:";
            put_expr(os, h);
            os << "\n";
        }
    }
    os << "sos2 " << num_sos2() << "\n";
    for (const Sos2& s : sos2_) {
        os << "set";
        for (int v : s.vars) os << " x" << v;
        os << "  # " << s.tag << "\n";
    }
}

}  // namespace reaccel
