#include "reaccel/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <ostream>

#include "reaccel/linearize.hpp"

namespace reaccel {

namespace {

struct Node {
    long id = 0;
    int depth = 0;
    double bound = -kInf;
    std::vector<BoundFix> fixes;
};

struct NodeOutcome {
    Node node;
    SocpSolution sol;
};

double fractionality(double v) { return std::min(v - std::floor(v), std::ceil(v) - v); }

// mass outside the best adjacent pair, normalized by the total mass
double sos2_violation(const std::vector<double>& lam) {
    double total = 0.0;
    for (double v : lam) total += std::max(0.0, v);
    if (total <= 0.0) return 0.0;
    double best_pair = 0.0;
    for (size_t i = 0; i + 1 < lam.size(); ++i)
        best_pair = std::max(best_pair, std::max(0.0, lam[i]) + std::max(0.0, lam[i + 1]));
    return (total - best_pair) / total;
}

std::vector<double> gather(const std::vector<int>& idx, const std::vector<double>& x) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(x[i]);
    return out;
}

}  // namespace

BnbResult solve_misocp(const ConicProgram& prog, const BnbSettings& st) {
    const auto t0 = std::chrono::steady_clock::now();
    BnbResult res;
    res.status = SolveStatus::MaxIter;

    std::vector<int> binaries;
    for (int i = 0; i < prog.num_vars(); ++i)
        if (prog.vars()[i].is_binary) binaries.push_back(i);

    // open nodes, keyed for deterministic best-bound selection
    std::map<std::pair<double, long>, Node> open;
    long next_id = 0;
    Node root;
    root.id = next_id++;
    open[{root.bound, root.id}] = root;

    double incumbent_obj = kInf;
    long discarded = 0;
    double discarded_bound = kInf;  // bounds of nodes dropped unresolved stay in the gap

    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto log_line = [&](const Node& n, const char* what, double obj) {
        if (!st.log) return;
        const double bound = open.empty() ? (res.has_incumbent ? incumbent_obj : -kInf)
                                          : std::min(open.begin()->first.first,
                                                     res.has_incumbent ? incumbent_obj : kInf);
        (*st.log) << "node " << n.id << " depth " << n.depth << " " << what << " obj " << obj
                  << " bound " << bound << " incumbent "
                  << (res.has_incumbent ? incumbent_obj : kInf) << " nodes " << res.nodes << "\n";
    };

    auto current_gap = [&] {
        if (!res.has_incumbent) return kInf;
        double bound = incumbent_obj;
        if (!open.empty()) bound = std::min(bound, open.begin()->first.first);
        bound = std::min(bound, discarded_bound);
        res.best_bound = bound;
        return (incumbent_obj - bound) / std::max(1.0, std::abs(incumbent_obj));
    };

    // Try to turn a relaxation solution into a mixed-integer feasible one:
    // binaries to the rounded values, every SOS2 set pinned to its heaviest
    // adjacent pair, then one continuous re-solve.
    auto polish = [&](const Node& n, const SocpSolution& sol) -> std::pair<bool, SocpSolution> {
        std::vector<BoundFix> fixes = n.fixes;
        for (int b : binaries) {
            const double v = std::round(sol.x[b]);
            fixes.push_back({b, v, v});
        }
        for (const auto& set : prog.sos2_sets()) {
            const std::vector<double> lam = gather(set.vars, sol.x);
            size_t keep = 0;
            double best = -1.0;
            for (size_t i = 0; i + 1 < lam.size(); ++i) {
                const double mass = std::max(0.0, lam[i]) + std::max(0.0, lam[i + 1]);
                if (mass > best) {
                    best = mass;
                    keep = i;
                }
            }
            for (size_t i = 0; i < set.vars.size(); ++i)
                if (i != keep && i != keep + 1) fixes.push_back({set.vars[i], 0.0, 0.0});
        }
        SocpSolution polished = solve_socp(prog, st.socp, fixes);
        if (polished.status != SolveStatus::Optimal) return {false, {}};
        return {true, polished};
    };

    auto accept_incumbent = [&](const Node& n, const SocpSolution& sol) {
        if (sol.objective < incumbent_obj - 1e-12) {
            incumbent_obj = sol.objective;
            res.incumbent = sol;
            res.assignment = n.fixes;
            res.has_incumbent = true;
            log_line(n, "incumbent", sol.objective);
        }
    };

    auto process = [&](NodeOutcome& out) {
        Node& n = out.node;
        SocpSolution& sol = out.sol;
        if (sol.status == SolveStatus::Infeasible) {
            log_line(n, "infeasible", kInf);
            return;
        }
        if (sol.status == SolveStatus::Unbounded) {
            res.status = SolveStatus::Unbounded;
            log_line(n, "unbounded", -kInf);
            return;
        }
        const bool trusted = sol.status == SolveStatus::Optimal;
        double bound = n.bound;
        if (trusted) bound = std::max(bound, sol.objective);
        if (res.has_incumbent && bound >= incumbent_obj - 1e-9 * std::max(1.0, std::abs(incumbent_obj))) {
            log_line(n, "pruned", sol.objective);
            return;
        }

        // branch selection
        int frac_var = -1;
        double frac_best = st.int_tol;
        if (trusted) {
            for (int b : binaries) {
                const double f = fractionality(sol.x[b]);
                if (f > frac_best) {
                    frac_best = f;
                    frac_var = b;
                }
            }
        } else if (!binaries.empty()) {
            for (int b : binaries) {
                bool fixed = false;
                for (const BoundFix& f : n.fixes)
                    if (f.var == b && f.ub - f.lb < 0.5) fixed = true;
                if (!fixed) {
                    frac_var = b;
                    break;
                }
            }
        }

        int worst_set = -1;
        double worst_viol = st.sos_tol;
        std::vector<double> worst_lam;
        if (trusted && frac_var < 0) {
            for (int si = 0; si < prog.num_sos2(); ++si) {
                std::vector<double> lam = gather(prog.sos2_sets()[si].vars, sol.x);
                const double v = sos2_violation(lam);
                if (v > worst_viol) {
                    worst_viol = v;
                    worst_set = si;
                    worst_lam = std::move(lam);
                }
            }
        }

        if (trusted && frac_var < 0 && worst_set < 0) {
            if (binaries.empty() && prog.num_sos2() == 0) {
                accept_incumbent(n, sol);
                log_line(n, "integral", sol.objective);
                return;
            }
            // integral and SOS2-feasible within tolerance; pin and re-solve
            auto [ok, polished] = polish(n, sol);
            if (ok) {
                accept_incumbent(n, polished);
                if (polished.objective - sol.objective <=
                    1e-7 * std::max(1.0, std::abs(sol.objective))) {
                    log_line(n, "integral", polished.objective);
                    return;  // node closed at its own optimum
                }
            }
            // pinning cost was not negligible: branch the heaviest-violating
            // set even though it is inside tolerance
            double tiny_best = 0.0;
            for (int si = 0; si < prog.num_sos2(); ++si) {
                std::vector<double> lam = gather(prog.sos2_sets()[si].vars, sol.x);
                const double v = sos2_violation(lam);
                if (v > tiny_best) {
                    tiny_best = v;
                    worst_set = si;
                    worst_lam = std::move(lam);
                }
            }
            if (worst_set < 0) {
                if (ok) {
                    log_line(n, "integral", polished.objective);
                } else {
                    ++discarded;
                    discarded_bound = std::min(discarded_bound, bound);
                    log_line(n, "discarded", sol.objective);
                }
                return;
            }
        } else if (trusted) {
            // heuristic incumbent from rounding at a fractional node
            auto [ok, polished] = polish(n, sol);
            if (ok) accept_incumbent(n, polished);
        }

        if (frac_var >= 0) {
            for (double v : {0.0, 1.0}) {
                Node child;
                child.id = next_id++;
                child.depth = n.depth + 1;
                child.bound = bound;
                child.fixes = n.fixes;
                child.fixes.push_back({frac_var, v, v});
                open[{child.bound, child.id}] = child;
            }
            log_line(n, "branch_bin", sol.objective);
            return;
        }
        if (worst_set >= 0) {
            const Sos2Branch br = sos2_branch(worst_lam, std::min(st.sos_tol, 1e-9));
            if (!br.already_feasible) {
                const auto& vars = prog.sos2_sets()[worst_set].vars;
                Node a, bnode;
                a.id = next_id++;
                bnode.id = next_id++;
                a.depth = bnode.depth = n.depth + 1;
                a.bound = bnode.bound = bound;
                a.fixes = bnode.fixes = n.fixes;
                for (size_t i = 0; i < vars.size(); ++i) {
                    if (static_cast<int>(i) > br.split) a.fixes.push_back({vars[i], 0.0, 0.0});
                    if (static_cast<int>(i) < br.split) bnode.fixes.push_back({vars[i], 0.0, 0.0});
                }
                open[{a.bound, a.id}] = a;
                open[{bnode.bound, bnode.id}] = bnode;
                log_line(n, "branch_sos2", sol.objective);
                return;
            }
        }
        ++discarded;
        discarded_bound = std::min(discarded_bound, bound);
        log_line(n, "discarded", sol.objective);
    };

    while (!open.empty()) {
        if (res.status == SolveStatus::Unbounded) break;
        if (res.nodes >= st.node_limit) break;
        if (st.time_limit > 0.0 && elapsed() > st.time_limit) break;
        if (current_gap() <= st.gap_tol) break;

        // node selection: plunge depth-first until an incumbent exists,
        // then best bound; ties by creation id
        const int batch = std::max(1, st.workers);
        std::vector<Node> picked;
        for (int i = 0; i < batch && !open.empty(); ++i) {
            auto it = open.begin();
            if (!res.has_incumbent) {
                it = std::max_element(open.begin(), open.end(), [](const auto& a, const auto& b) {
                    const Node& na = a.second;
                    const Node& nb = b.second;
                    return std::pair(na.depth, -na.id) < std::pair(nb.depth, -nb.id);
                });
            }
            picked.push_back(it->second);
            open.erase(it);
        }
        std::vector<NodeOutcome> outcomes(picked.size());
        if (picked.size() == 1) {
            outcomes[0] = {picked[0], solve_socp(prog, st.socp, picked[0].fixes)};
        } else {
            std::vector<std::future<SocpSolution>> futs;
            futs.reserve(picked.size());
            for (const Node& nd : picked)
                futs.push_back(std::async(std::launch::async, [&prog, &st, nd] {
                    return solve_socp(prog, st.socp, nd.fixes);
                }));
            for (size_t i = 0; i < picked.size(); ++i) outcomes[i] = {picked[i], futs[i].get()};
        }
        // merge in node-id order so results do not depend on thread timing
        std::sort(outcomes.begin(), outcomes.end(),
                  [](const NodeOutcome& a, const NodeOutcome& b) { return a.node.id < b.node.id; });
        for (NodeOutcome& out : outcomes) {
            ++res.nodes;
            process(out);
        }
    }

    res.gap = current_gap();
    if (res.status != SolveStatus::Unbounded) {
        if (res.has_incumbent && res.gap <= st.gap_tol) {
            res.status = SolveStatus::Optimal;
        } else if (!res.has_incumbent && open.empty() && discarded == 0) {
            res.status = SolveStatus::Infeasible;
        } else {
            res.status = SolveStatus::MaxIter;  // budget exhausted, honest gap attached
        }
    }
    res.wall_time = elapsed();
    return res;
}

ConeTightness check_cone_tightness(const ConicProgram& prog, const std::vector<double>& x,
                                   const std::vector<double>& scales) {
    ConeTightness ct;
    ct.rel.resize(prog.num_cones(), 0.0);
    for (int ci = 0; ci < prog.num_cones(); ++ci) {
        const auto& cone = prog.cones()[ci];
        const double tail = prog.eval(cone.tail, x);
        double head_sq = 0.0;
        for (const auto& h : cone.head) {
            const double v = prog.eval(h, x);
            head_sq += v * v;
        }
        const double resid = 0.25 * (tail * tail - head_sq);
        const double scale = (ci < static_cast<int>(scales.size()) && scales[ci] > 0.0)
                                 ? scales[ci]
                                 : std::max(1.0, 0.25 * tail * tail);
        ct.rel[ci] = resid / scale;
        if (ct.rel[ci] > ct.max_rel) {
            ct.max_rel = ct.rel[ci];
            ct.argmax = ci;
        }
    }
    return ct;
}

}  // namespace reaccel
