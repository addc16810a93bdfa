#include "reaccel/socp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace reaccel {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

constexpr double kBigBound = 1e18;  // bounds beyond this are treated as infinite

// ---------------------------------------------------------------------------
// Standard form  min c'x  s.t.  Ax = b,  Gx + s = h,  s in R+^{n_lp} x SOCs
// ---------------------------------------------------------------------------

struct RowRef {
    enum Kind { None, Linear, Bound } kind = None;
    int std_row = -1;   // index into G rows or A rows
    bool in_A = false;
    double sign = 1.0;  // program-row dual = sign * std dual
};

struct StdForm {
    int n = 0;
    SpMat A, G;
    Vec b, h, c;
    double obj_offset = 0.0;
    int n_lp = 0;
    std::vector<int> soc_dims;

    std::vector<int> var_map;       // program var -> std var (-1 when fixed)
    std::vector<double> fixed_val;  // valid where var_map == -1
    std::vector<RowRef> row_refs;   // per program row
    std::vector<int> cone_start;    // per program cone: row offset in G

    bool trivially_infeasible = false;
    std::string infeasible_tag;
};

StdForm build_std_form(const ConicProgram& prog, const std::vector<BoundFix>& fixes) {
    StdForm sf;
    const int np = prog.num_vars();

    std::vector<double> lb(np), ub(np);
    for (int i = 0; i < np; ++i) {
        lb[i] = prog.vars()[i].lb;
        ub[i] = prog.vars()[i].ub;
    }
    for (const BoundFix& f : fixes) {
        lb[f.var] = std::max(lb[f.var], f.lb);
        ub[f.var] = std::min(ub[f.var], f.ub);
    }

    sf.var_map.assign(np, -1);
    sf.fixed_val.assign(np, 0.0);
    for (int i = 0; i < np; ++i) {
        if (lb[i] > ub[i] + 1e-12) {
            sf.trivially_infeasible = true;
            sf.infeasible_tag = "bounds:" + prog.vars()[i].name;
            return sf;
        }
        if (std::isfinite(lb[i]) && std::isfinite(ub[i]) &&
            ub[i] - lb[i] <= 1e-14 * std::max(1.0, std::abs(lb[i]))) {
            sf.fixed_val[i] = 0.5 * (lb[i] + ub[i]);
        } else {
            sf.var_map[i] = sf.n++;
        }
    }

    auto reduce = [&](const LinExpr& e, double scale, std::vector<Triplet>& trips, int row,
                      double& rhs_out) {
        double cst = e.constant * scale;
        for (const auto& [v, coef] : e.terms) {
            if (sf.var_map[v] < 0)
                cst += coef * scale * sf.fixed_val[v];
            else
                trips.emplace_back(row, sf.var_map[v], coef * scale);
        }
        rhs_out = -cst;  // expr = terms + cst (sense) 0  ->  terms (sense) -cst
    };

    std::vector<Triplet> at, gt;
    std::vector<double> bv, hv;
    sf.row_refs.assign(prog.num_rows(), {});

    for (int r = 0; r < prog.num_rows(); ++r) {
        const auto& row = prog.rows()[r];
        const double scale = (row.sense == RowSense::Ge) ? -1.0 : 1.0;
        std::vector<Triplet> tmp;
        double rhs = 0.0;
        reduce(row.expr, scale, tmp, 0, rhs);
        if (tmp.empty()) {
            const bool ok = (row.sense == RowSense::Eq) ? std::abs(rhs) <= 1e-9
                                                        : rhs >= -1e-9;
            if (!ok) {
                sf.trivially_infeasible = true;
                sf.infeasible_tag = row.tag;
                return sf;
            }
            continue;
        }
        if (row.sense == RowSense::Eq) {
            const int idx = static_cast<int>(bv.size());
            for (auto& t : tmp) at.emplace_back(idx, t.col(), t.value());
            bv.push_back(rhs);
            sf.row_refs[r] = {RowRef::Linear, idx, true, 1.0};
        } else {
            const int idx = static_cast<int>(hv.size());
            for (auto& t : tmp) gt.emplace_back(idx, t.col(), t.value());
            hv.push_back(rhs);
            sf.row_refs[r] = {RowRef::Linear, idx, false, scale};
        }
    }

    // finite bounds of surviving variables
    for (int i = 0; i < np; ++i) {
        const int j = sf.var_map[i];
        if (j < 0) continue;
        if (ub[i] < kBigBound) {
            gt.emplace_back(static_cast<int>(hv.size()), j, 1.0);
            hv.push_back(ub[i]);
        }
        if (lb[i] > -kBigBound) {
            gt.emplace_back(static_cast<int>(hv.size()), j, -1.0);
            hv.push_back(-lb[i]);
        }
    }
    sf.n_lp = static_cast<int>(hv.size());
    if (sf.n_lp == 0) {  // keep the LP cone non-empty
        hv.push_back(1.0);
        sf.n_lp = 1;
    }

    // cones
    sf.cone_start.assign(prog.num_cones(), -1);
    for (int ci = 0; ci < prog.num_cones(); ++ci) {
        const auto& cone = prog.cones()[ci];
        sf.cone_start[ci] = static_cast<int>(hv.size());
        std::vector<const LinExpr*> exprs = {&cone.tail};
        for (const auto& hrow : cone.head) exprs.push_back(&hrow);
        for (const LinExpr* e : exprs) {
            std::vector<Triplet> tmp;
            double rhs = 0.0;
            reduce(*e, -1.0, tmp, 0, rhs);  // s = expr  ->  -expr + s = 0
            const int idx = static_cast<int>(hv.size());
            for (auto& t : tmp) gt.emplace_back(idx, t.col(), t.value());
            hv.push_back(rhs);
        }
        sf.soc_dims.push_back(static_cast<int>(cone.head.size()) + 1);
    }

    sf.A.resize(static_cast<int>(bv.size()), sf.n);
    sf.A.setFromTriplets(at.begin(), at.end());
    sf.G.resize(static_cast<int>(hv.size()), sf.n);
    sf.G.setFromTriplets(gt.begin(), gt.end());
    sf.b = Eigen::Map<Vec>(bv.data(), static_cast<int>(bv.size()));
    sf.h = Eigen::Map<Vec>(hv.data(), static_cast<int>(hv.size()));

    sf.c = Vec::Zero(sf.n);
    sf.obj_offset = prog.objective().constant;
    for (const auto& [v, coef] : prog.objective().terms) {
        if (sf.var_map[v] < 0)
            sf.obj_offset += coef * sf.fixed_val[v];
        else
            sf.c[sf.var_map[v]] += coef;
    }
    return sf;
}

// ---------------------------------------------------------------------------
// Ruiz equilibration (uniform within each SOC block so cones are preserved)
// ---------------------------------------------------------------------------

struct Equil {
    Vec d_var, e_a, e_g;  // x = d_var .* x_s, y = e_a .* y_s, z = e_g .* z_s
};

Equil equilibrate(StdForm& sf) {
    const int n = sf.n, p = static_cast<int>(sf.b.size()), m = static_cast<int>(sf.h.size());
    Equil eq;
    eq.d_var = Vec::Ones(n);
    eq.e_a = Vec::Ones(p);
    eq.e_g = Vec::Ones(m);

    auto apply = [&](const Vec& dc, const Vec& ra, const Vec& rg) {
        for (int k = 0; k < sf.A.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf.A, k); it; ++it)
                it.valueRef() *= ra(it.row()) * dc(it.col());
        for (int k = 0; k < sf.G.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf.G, k); it; ++it)
                it.valueRef() *= rg(it.row()) * dc(it.col());
    };

    for (int pass = 0; pass < 3; ++pass) {
        Vec col = Vec::Zero(n), rowa = Vec::Zero(p), rowg = Vec::Zero(m);
        for (int k = 0; k < sf.A.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf.A, k); it; ++it) {
                const double a = std::abs(it.value());
                col(it.col()) = std::max(col(it.col()), a);
                rowa(it.row()) = std::max(rowa(it.row()), a);
            }
        for (int k = 0; k < sf.G.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf.G, k); it; ++it) {
                const double a = std::abs(it.value());
                col(it.col()) = std::max(col(it.col()), a);
                rowg(it.row()) = std::max(rowg(it.row()), a);
            }
        // one scalar per SOC block
        int at = sf.n_lp;
        for (int d : sf.soc_dims) {
            const double blk = rowg.segment(at, d).maxCoeff();
            rowg.segment(at, d).setConstant(blk);
            at += d;
        }
        auto scale_of = [](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; };
        Vec dc = col.unaryExpr(scale_of), ra = rowa.unaryExpr(scale_of), rg = rowg.unaryExpr(scale_of);
        apply(dc, ra, rg);
        eq.d_var.array() *= dc.array();
        eq.e_a.array() *= ra.array();
        eq.e_g.array() *= rg.array();
    }
    sf.b.array() *= eq.e_a.array();
    sf.h.array() *= eq.e_g.array();
    sf.c.array() *= eq.d_var.array();
    return eq;
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scalings
// ---------------------------------------------------------------------------

struct SocScaling {
    double eta_sq = 1.0;
    double a = 1.0;     // first component of the normalized scaling point
    Vec q;              // tail of the normalized scaling point
};

struct Scalings {
    Vec lp_v;  // s_i / z_i
    std::vector<SocScaling> soc;
};

// lambda = W z for the current scaling
void scale_mult(const Scalings& sc, int n_lp, const std::vector<int>& dims, const Vec& z,
                Vec& out) {
    out.resize(z.size());
    out.head(n_lp) = sc.lp_v.head(n_lp).cwiseSqrt().cwiseProduct(z.head(n_lp));
    int at = n_lp;
    for (size_t k = 0; k < dims.size(); ++k) {
        const SocScaling& w = sc.soc[k];
        const int d = dims[k];
        const double eta = std::sqrt(w.eta_sq);
        const double zeta = w.q.dot(z.segment(at + 1, d - 1));
        const double factor = z(at) + zeta / (1.0 + w.a);
        out(at) = eta * (w.a * z(at) + zeta);
        out.segment(at + 1, d - 1) = eta * (z.segment(at + 1, d - 1) + factor * w.q);
        at += d;
    }
}

bool update_scalings(const Vec& s, const Vec& z, int n_lp, const std::vector<int>& dims,
                     Scalings& sc, Vec& lambda) {
    if ((s.head(n_lp).array() <= 0.0).any() || (z.head(n_lp).array() <= 0.0).any()) return false;
    sc.lp_v = s.head(n_lp).cwiseQuotient(z.head(n_lp));
    sc.soc.resize(dims.size());
    int at = n_lp;
    for (size_t k = 0; k < dims.size(); ++k) {
        const int d = dims[k];
        const double sres = s(at) * s(at) - s.segment(at + 1, d - 1).squaredNorm();
        const double zres = z(at) * z(at) - z.segment(at + 1, d - 1).squaredNorm();
        if (sres <= 0.0 || zres <= 0.0) return false;
        const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
        Vec sbar = s.segment(at, d) / snorm;
        Vec zbar = z.segment(at, d) / znorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        SocScaling& w = sc.soc[k];
        w.eta_sq = snorm / znorm;
        w.a = (0.5 / gamma) * (sbar(0) + zbar(0));
        w.q = (0.5 / gamma) * (sbar.tail(d - 1) - zbar.tail(d - 1));
        at += d;
    }
    lambda.resize(s.size());
    scale_mult(sc, n_lp, dims, z, lambda);
    return true;
}

double conic_product(const Vec& u, const Vec& v, int n_lp, const std::vector<int>& dims, Vec& w) {
    w.resize(u.size());
    w.head(n_lp) = u.head(n_lp).cwiseProduct(v.head(n_lp));
    double mu = w.head(n_lp).lpNorm<1>();
    int at = n_lp;
    for (int d : dims) {
        w(at) = u.segment(at, d).dot(v.segment(at, d));
        mu += std::abs(w(at));
        w.segment(at + 1, d - 1) =
            u(at) * v.segment(at + 1, d - 1) + v(at) * u.segment(at + 1, d - 1);
        at += d;
    }
    return mu;
}

void conic_division(const Vec& u, const Vec& w, int n_lp, const std::vector<int>& dims, Vec& v) {
    v.resize(u.size());
    v.head(n_lp) = w.head(n_lp).cwiseQuotient(u.head(n_lp));
    int at = n_lp;
    for (int d : dims) {
        const double u0 = u(at), w0 = w(at);
        const double rho = u0 * u0 - u.segment(at + 1, d - 1).squaredNorm();
        const double zeta = u.segment(at + 1, d - 1).dot(w.segment(at + 1, d - 1));
        const double factor = (zeta / u0 - w0) / rho;
        v(at) = (u0 * w0 - zeta) / rho;
        v.segment(at + 1, d - 1) =
            factor * u.segment(at + 1, d - 1) + w.segment(at + 1, d - 1) / u0;
        at += d;
    }
}

void bring_to_cone(const Vec& r, int n_lp, const std::vector<int>& dims, Vec& s) {
    double alpha = -0.99;
    for (int i = 0; i < n_lp; ++i)
        if (r(i) <= 0.0 && -r(i) > alpha) alpha = -r(i);
    int at = n_lp;
    for (int d : dims) {
        const double res = r(at) - r.segment(at + 1, d - 1).norm();
        if (res <= 0.0 && -res > alpha) alpha = -res;
        at += d;
    }
    alpha += 1.0;
    s = r;
    s.head(n_lp).array() += alpha;
    at = n_lp;
    for (int d : dims) {
        s(at) += alpha;
        at += d;
    }
}

double line_search(const Vec& lambda, const Vec& ds, const Vec& dz, double tau, double dtau,
                   double kap, double dkap, int n_lp, const std::vector<int>& dims) {
    double alpha = 10.0;
    for (int i = 0; i < n_lp; ++i) {
        const double rho = ds(i) / lambda(i);
        const double sig = dz(i) / lambda(i);
        if (rho < 0.0) alpha = std::min(alpha, -1.0 / rho);
        if (sig < 0.0) alpha = std::min(alpha, -1.0 / sig);
    }
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);

    int at = n_lp;
    for (int d : dims) {
        const double lk2 = lambda(at) * lambda(at) - lambda.segment(at + 1, d - 1).squaredNorm();
        if (lk2 <= 0.0) {
            at += d;
            continue;
        }
        const double lknorm = std::sqrt(lk2);
        Vec lkbar = lambda.segment(at, d) / lknorm;
        const double inv = 1.0 / lknorm;
        auto bound_from = [&](const Vec& dv) {
            const double lk_dot = lkbar(0) * dv(at) - lkbar.tail(d - 1).dot(dv.segment(at + 1, d - 1));
            const double rho0 = inv * lk_dot;
            const double factor = (lk_dot + dv(at)) / (lkbar(0) + 1.0);
            const double rho1 =
                inv * (dv.segment(at + 1, d - 1) - factor * lkbar.tail(d - 1)).norm();
            return rho1 - rho0;
        };
        const double step = std::max({0.0, bound_from(ds), bound_from(dz)});
        if (step > 0.0) alpha = std::min(alpha, 1.0 / step);
        at += d;
    }
    return std::clamp(alpha, 1e-8, 1.0);
}

// ---------------------------------------------------------------------------
// KKT system with static regularization and iterative refinement
// ---------------------------------------------------------------------------

class KktSystem {
  public:
    KktSystem(const StdForm& sf, double reg) : sf_(sf), reg_(reg) {
        n_ = sf.n;
        p_ = static_cast<int>(sf.b.size());
        m_ = static_cast<int>(sf.h.size());
        dim_ = n_ + p_ + m_;
        build_pattern();
        ldlt_.analyzePattern(K_);
    }

    // W^2 blocks for the current scaling; identity when sc == nullptr.
    bool factorize(const Scalings* sc) {
        set_scaling_values(sc);
        ldlt_.factorize(K_);
        return ldlt_.info() == Eigen::Success;
    }

    // Solve K * u = rhs with refinement against the unregularized operator.
    void solve(const Vec& rhs, Vec& u, int refine_iters) const {
        u = ldlt_.solve(rhs);
        for (int it = 0; it < refine_iters; ++it) {
            Vec err = rhs - unreg_mult(u);
            if (err.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
                break;
            u += ldlt_.solve(err);
        }
    }

    int dim() const { return dim_; }
    int n() const { return n_; }
    int p() const { return p_; }
    int m() const { return m_; }

  private:
    void build_pattern() {
        std::vector<Triplet> trips;
        for (int i = 0; i < n_; ++i) trips.emplace_back(i, i, reg_);
        for (int k = 0; k < sf_.A.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf_.A, k); it; ++it)
                trips.emplace_back(it.col(), n_ + it.row(), it.value());  // A' block (upper)
        for (int i = 0; i < p_; ++i) trips.emplace_back(n_ + i, n_ + i, -reg_);
        for (int k = 0; k < sf_.G.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf_.G, k); it; ++it)
                trips.emplace_back(it.col(), n_ + p_ + it.row(), it.value());  // G' block
        // scaling block: LP diagonal + dense upper triangles per cone
        scaling_slots_.clear();
        for (int i = 0; i < sf_.n_lp; ++i) {
            scaling_slots_.emplace_back(n_ + p_ + i, n_ + p_ + i);
            trips.emplace_back(n_ + p_ + i, n_ + p_ + i, -1.0 - reg_);
        }
        int at = sf_.n_lp;
        for (int d : sf_.soc_dims) {
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) {
                    scaling_slots_.emplace_back(n_ + p_ + at + i, n_ + p_ + at + j);
                    trips.emplace_back(n_ + p_ + at + i, n_ + p_ + at + j,
                                       i == j ? -1.0 - reg_ : 0.0);
                }
            at += d;
        }
        K_.resize(dim_, dim_);
        K_.setFromTriplets(trips.begin(), trips.end());
        K_.makeCompressed();
        // record value offsets of the mutable scaling slots
        slot_offsets_.clear();
        for (const auto& [r, c] : scaling_slots_) {
            bool found = false;
            for (SpMat::InnerIterator it(K_, c); it; ++it)
                if (it.row() == r) {
                    slot_offsets_.push_back(static_cast<int>(&it.valueRef() - K_.valuePtr()));
                    found = true;
                    break;
                }
            if (!found) std::abort();
        }
    }

    void set_scaling_values(const Scalings* sc) {
        double* vals = K_.valuePtr();
        size_t slot = 0;
        w2_diag_.assign(m_, 1.0);
        w2_blocks_.clear();
        for (int i = 0; i < sf_.n_lp; ++i) {
            const double w2 = sc ? sc->lp_v(i) : 1.0;
            w2_diag_[i] = w2;
            vals[slot_offsets_[slot++]] = -w2 - reg_;
        }
        int at = sf_.n_lp;
        for (size_t k = 0; k < sf_.soc_dims.size(); ++k) {
            const int d = sf_.soc_dims[k];
            Eigen::MatrixXd w2(d, d);
            if (sc) {
                const SocScaling& w = sc->soc[k];
                // W^2 = eta^2 (2 wbar wbar' - J), wbar = (a, q)
                w2(0, 0) = w.eta_sq * (2.0 * w.a * w.a - 1.0);
                for (int j = 1; j < d; ++j) {
                    w2(0, j) = w2(j, 0) = w.eta_sq * 2.0 * w.a * w.q(j - 1);
                    for (int i = 1; i <= j; ++i)
                        w2(i, j) = w2(j, i) =
                            w.eta_sq * (2.0 * w.q(i - 1) * w.q(j - 1) + (i == j ? 1.0 : 0.0));
                }
            } else {
                w2.setIdentity();
            }
            w2_blocks_.push_back(w2);
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j)
                    vals[slot_offsets_[slot++]] = -w2(i, j) - (i == j ? reg_ : 0.0);
            at += d;
        }
    }

    // (unregularized K) * u, using the saved W^2 blocks
    Vec unreg_mult(const Vec& u) const {
        Vec r = Vec::Zero(dim_);
        const auto ux = u.head(n_);
        const auto uy = u.segment(n_, p_);
        const auto uz = u.tail(m_);
        r.head(n_) = sf_.A.transpose() * uy + sf_.G.transpose() * uz;
        r.segment(n_, p_) = sf_.A * ux;
        r.tail(m_) = sf_.G * ux;
        for (int i = 0; i < sf_.n_lp; ++i) r(n_ + p_ + i) -= w2_diag_[i] * uz(i);
        int at = sf_.n_lp;
        for (size_t k = 0; k < sf_.soc_dims.size(); ++k) {
            const int d = sf_.soc_dims[k];
            r.segment(n_ + p_ + at, d) -= w2_blocks_[k] * uz.segment(at, d);
            at += d;
        }
        return r;
    }

    const StdForm& sf_;
    double reg_;
    int n_ = 0, p_ = 0, m_ = 0, dim_ = 0;
    SpMat K_;
    std::vector<std::pair<int, int>> scaling_slots_;
    std::vector<int> slot_offsets_;
    std::vector<double> w2_diag_;
    std::vector<Eigen::MatrixXd> w2_blocks_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Upper> ldlt_;
};

// ---------------------------------------------------------------------------
// The homogeneous self-dual predictor-corrector loop
// ---------------------------------------------------------------------------

struct Iterate {
    Vec x, y, z, s;
    double tau = 1.0, kap = 1.0;
    double pres = kInf, dres = kInf, gap = kInf, relgap = kInf, mu = kInf;
    double pcost = 0.0, dcost = 0.0;
    double pinfres = kInf, dinfres = kInf;
    bool better_than(const Iterate& o) const {
        return std::max(pres, dres) + std::max(0.0, relgap) <
               std::max(o.pres, o.dres) + std::max(0.0, o.relgap);
    }
};

struct IpmResult {
    SolveStatus status = SolveStatus::MaxIter;
    Iterate w;
    int iters = 0;
    std::string message;
};

IpmResult run_ipm(const StdForm& sf, const SocpSettings& st) {
    const int n = sf.n, p = static_cast<int>(sf.b.size()), m = static_cast<int>(sf.h.size());
    const int cone_count = sf.n_lp + static_cast<int>(sf.soc_dims.size());

    KktSystem kkt(sf, st.static_reg);
    IpmResult res;
    Iterate& w = res.w;

    // initial point from two scaling-free solves
    if (!kkt.factorize(nullptr)) {
        res.status = SolveStatus::Fatal;
        res.message = "initial KKT factorization failed";
        return res;
    }
    Vec rhs = Vec::Zero(kkt.dim()), sol(kkt.dim());
    rhs.segment(n, p) = sf.b;
    rhs.tail(m) = sf.h;
    kkt.solve(rhs, sol, st.refine_iters);
    w.x = sol.head(n);
    bring_to_cone(-sol.tail(m), sf.n_lp, sf.soc_dims, w.s);

    rhs.setZero();
    rhs.head(n) = -sf.c;
    kkt.solve(rhs, sol, st.refine_iters);
    w.y = sol.segment(n, p);
    bring_to_cone(sol.tail(m), sf.n_lp, sf.soc_dims, w.z);
    w.tau = 1.0;
    w.kap = 1.0;

    const double resx0 = std::max(1.0, sf.c.norm());
    const double resy0 = std::max(1.0, sf.b.norm());
    const double resz0 = std::max(1.0, sf.h.norm());

    Vec rhs1 = Vec::Zero(kkt.dim());
    rhs1.head(n) = -sf.c;
    rhs1.segment(n, p) = sf.b;
    rhs1.tail(m) = sf.h;

    Iterate best = w;
    bool have_best = false;
    double pres_prev = kInf;

    Vec rx, ry, rz, lambda, dz_aff, w_dz, ds_by_w, ds_comb, tmp;
    Scalings sc;
    Vec sol1(kkt.dim()), sol2(kkt.dim());

    for (int iter = 0; iter <= st.max_iter; ++iter) {
        res.iters = iter;
        // residuals: rx = -A'y - G'z - tau c ; ry = Ax - tau b ; rz = s + Gx - tau h
        rx = -(sf.G.transpose() * w.z);
        if (p > 0) rx -= sf.A.transpose() * w.y;
        const double hresx = rx.norm();
        rx -= w.tau * sf.c;
        ry = (p > 0) ? Vec(sf.A * w.x) : Vec::Zero(0);
        const double hresy = (p > 0) ? ry.norm() : 0.0;
        if (p > 0) ry -= w.tau * sf.b;
        rz = w.s + sf.G * w.x;
        const double hresz = rz.norm();
        rz -= w.tau * sf.h;
        const double cx = sf.c.dot(w.x);
        const double by = (p > 0) ? sf.b.dot(w.y) : 0.0;
        const double hz = sf.h.dot(w.z);
        const double rt = w.kap + cx + by + hz;

        const double nx = w.x.norm(), ny = w.y.norm(), nz = w.z.norm(), ns = w.s.norm();
        w.gap = w.s.dot(w.z);
        w.mu = (w.gap + w.kap * w.tau) / (cone_count + 1);
        w.pcost = cx / w.tau;
        w.dcost = -(by + hz) / w.tau;
        if (w.pcost < 0.0)
            w.relgap = w.gap / (-w.pcost * w.tau * w.tau);
        else if (w.dcost > 0.0)
            w.relgap = w.gap / (w.dcost * w.tau * w.tau);
        else
            w.relgap = kInf;
        {
            const double nry = (p > 0) ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0;
            const double nrz = rz.norm() / std::max(resz0 + nx + ns, 1.0);
            w.pres = std::max(nry, nrz) / w.tau;
            w.dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / w.tau;
        }
        w.pinfres = ((by + hz) / std::max(ny + nz, 1.0) < -st.reltol)
                        ? hresx / std::max(ny + nz, 1.0)
                        : kInf;
        w.dinfres = (cx / std::max(nx, 1.0) < -st.reltol)
                        ? std::max(hresy / std::max(nx, 1.0), hresz / std::max(nx + ns, 1.0))
                        : kInf;

        if (st.verbose)
            std::printf("it %2d  pcost %+.6e  gap %.3e  pres %.3e  dres %.3e  k/t %.3e\n", iter,
                        w.pcost, w.gap, w.pres, w.dres, w.kap / w.tau);

        // divergence safeguard
        if (iter > 0 && (w.pres > 100.0 * pres_prev || !std::isfinite(w.pres))) {
            if (have_best) w = best;
            break;
        }
        pres_prev = std::min(pres_prev, w.pres);

        auto optimal_at = [&](double ft, double at, double rt_) {
            return (-cx / w.tau > 0.0 || -(by + hz) / w.tau >= -at) && w.pres < ft &&
                   w.dres < ft && (w.gap / (w.tau * w.tau) < at || w.relgap < rt_);
        };
        if (optimal_at(st.feastol, st.abstol, st.reltol)) {
            res.status = SolveStatus::Optimal;
            break;
        }
        if (std::isfinite(w.dinfres) && w.dinfres < st.feastol && w.tau < w.kap) {
            res.status = SolveStatus::Unbounded;
            res.message = "dual infeasibility certificate";
            break;
        }
        if (std::isfinite(w.pinfres) && w.pinfres < st.feastol && w.tau < w.kap) {
            res.status = SolveStatus::Infeasible;
            res.message = "primal infeasibility certificate";
            break;
        }
        if (iter == st.max_iter) {
            if (have_best && best.better_than(w)) w = best;
            if (optimal_at(st.feastol_inacc, st.abstol_inacc, st.reltol_inacc))
                res.status = SolveStatus::Optimal;
            else {
                res.status = SolveStatus::MaxIter;
                res.message = "iteration limit";
            }
            break;
        }
        if (!have_best || w.better_than(best)) {
            best = w;
            have_best = true;
        }

        if (!update_scalings(w.s, w.z, sf.n_lp, sf.soc_dims, sc, lambda)) {
            if (have_best) w = best;
            res.status = SolveStatus::MaxIter;
            res.message = "iterate left the cone";
            break;
        }
        if (!kkt.factorize(&sc)) {
            res.status = SolveStatus::Fatal;
            res.message = "KKT factorization failed";
            break;
        }

        kkt.solve(rhs1, sol1, st.refine_iters);
        const Vec x1 = sol1.head(n), y1 = sol1.segment(n, p), z1 = sol1.tail(m);
        const double dtau_denom = w.kap / w.tau - sf.c.dot(x1) - ((p > 0) ? sf.b.dot(y1) : 0.0) -
                                  sf.h.dot(z1);

        // affine direction
        Vec rhs2 = Vec::Zero(kkt.dim());
        rhs2.head(n) = rx;
        if (p > 0) rhs2.segment(n, p) = -ry;
        rhs2.tail(m) = w.s - rz;
        kkt.solve(rhs2, sol2, st.refine_iters);
        Vec x2 = sol2.head(n), y2 = sol2.segment(n, p), z2 = sol2.tail(m);

        const double dtau_aff = (rt - w.kap + sf.c.dot(x2) + ((p > 0) ? sf.b.dot(y2) : 0.0) +
                                 sf.h.dot(z2)) /
                                dtau_denom;
        dz_aff = z2 + dtau_aff * z1;
        scale_mult(sc, sf.n_lp, sf.soc_dims, dz_aff, w_dz);
        ds_by_w = -w_dz - lambda;  // W^{-T} ds_aff
        const double dkap_aff = -w.kap - (w.kap / w.tau) * dtau_aff;

        const double alpha_aff = line_search(lambda, ds_by_w, w_dz, w.tau, dtau_aff, w.kap,
                                             dkap_aff, sf.n_lp, sf.soc_dims);
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 1e-4, 0.9999);

        // combined direction
        conic_product(lambda, lambda, sf.n_lp, sf.soc_dims, ds_comb);
        conic_product(ds_by_w, w_dz, sf.n_lp, sf.soc_dims, tmp);
        ds_comb += tmp;
        const double sigmamu = sigma * w.mu;
        for (int i = 0; i < sf.n_lp; ++i) ds_comb(i) -= sigmamu;
        {
            int at = sf.n_lp;
            for (int d : sf.soc_dims) {
                ds_comb(at) -= sigmamu;
                at += d;
            }
        }
        conic_division(lambda, ds_comb, sf.n_lp, sf.soc_dims, ds_by_w);  // lambda \ ds
        scale_mult(sc, sf.n_lp, sf.soc_dims, ds_by_w, tmp);              // W (lambda \ ds)
        rhs2.head(n) = (1.0 - sigma) * rx;
        if (p > 0) rhs2.segment(n, p) = -(1.0 - sigma) * ry;
        rhs2.tail(m) = -(1.0 - sigma) * rz + tmp;
        kkt.solve(rhs2, sol2, st.refine_iters);
        x2 = sol2.head(n);
        y2 = sol2.segment(n, p);
        z2 = sol2.tail(m);

        const double bkap = w.kap * w.tau + dkap_aff * dtau_aff - sigmamu;
        const double dtau = ((1.0 - sigma) * rt - bkap / w.tau + sf.c.dot(x2) +
                             ((p > 0) ? sf.b.dot(y2) : 0.0) + sf.h.dot(z2)) /
                            dtau_denom;
        x2 += dtau * x1;
        y2 += dtau * y1;
        z2 += dtau * z1;
        scale_mult(sc, sf.n_lp, sf.soc_dims, z2, w_dz);
        ds_by_w = -(ds_by_w + w_dz);
        const double dkap = -(bkap + w.kap * dtau) / w.tau;

        const double alpha =
            0.99 * line_search(lambda, ds_by_w, w_dz, w.tau, dtau, w.kap, dkap, sf.n_lp,
                               sf.soc_dims);
        scale_mult(sc, sf.n_lp, sf.soc_dims, ds_by_w, tmp);  // ds = W ds_by_w

        w.x += alpha * x2;
        w.y += alpha * y2;
        w.z += alpha * z2;
        w.s += alpha * tmp;
        w.kap += alpha * dkap;
        w.tau += alpha * dtau;
    }
    return res;
}

}  // namespace

SocpSolution solve_socp(const ConicProgram& prog, const SocpSettings& settings,
                        const std::vector<BoundFix>& fixes) {
    SocpSolution out;
    StdForm sf = build_std_form(prog, fixes);
    if (sf.trivially_infeasible) {
        out.status = SolveStatus::Infeasible;
        out.message = "infeasible before solving: " + sf.infeasible_tag;
        return out;
    }
    const Equil eq = equilibrate(sf);
    IpmResult res = run_ipm(sf, settings);
    out.status = res.status;
    out.iterations = res.iters;
    out.message = res.message;
    out.pres = res.w.pres;
    out.dres = res.w.dres;
    out.relgap = res.w.relgap;

    const int np = prog.num_vars();
    out.x.assign(np, 0.0);
    if (res.status == SolveStatus::Optimal || res.status == SolveStatus::MaxIter) {
        const double tau = res.w.tau;
        Vec xs = res.w.x / tau;
        Vec ys = (res.w.y.size() > 0) ? Vec(res.w.y / tau) : Vec::Zero(0);
        Vec zs = res.w.z / tau;
        Vec ss = res.w.s / tau;
        // unscale
        xs.array() *= eq.d_var.array();
        ys.array() *= eq.e_a.array();
        zs.array() *= eq.e_g.array();
        ss.array() /= eq.e_g.array();
        out.gap = ss.dot(zs);
        out.complementarity = out.gap;
        for (int i = 0; i < np; ++i)
            out.x[i] = (sf.var_map[i] >= 0) ? xs(sf.var_map[i]) : sf.fixed_val[i];
        out.objective = prog.objective_value(out.x);
        out.row_duals.assign(prog.num_rows(), 0.0);
        for (int r = 0; r < prog.num_rows(); ++r) {
            const RowRef& ref = sf.row_refs[r];
            if (ref.kind != RowRef::Linear) continue;
            out.row_duals[r] = ref.sign * (ref.in_A ? ys(ref.std_row) : zs(ref.std_row));
        }
        out.cone_duals.resize(prog.num_cones());
        for (int ci = 0; ci < prog.num_cones(); ++ci) {
            const int start = sf.cone_start[ci];
            const int d = sf.soc_dims[ci];
            out.cone_duals[ci].assign(zs.data() + start, zs.data() + start + d);
        }
    }
    return out;
}

}  // namespace reaccel
