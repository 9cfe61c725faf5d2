#include "gsess/typecheck.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "gsess/natsolve.hpp"
#include "gsess/parser.hpp"
#include "gsess/pretty.hpp"
#include "gsess/protocol.hpp"

namespace gsess {

const char* rule_name(TypeRule rule) {
    switch (rule) {
        case TypeRule::Scope: return "scope";
        case TypeRule::Linearity: return "linearity";
        case TypeRule::Contraction: return "contraction";
        case TypeRule::Grade: return "grade";
        case TypeRule::Semiring: return "semiring";
        case TypeRule::Constraint: return "constraint";
        case TypeRule::Promotion: return "promotion";
        case TypeRule::NatIndex: return "nat-index";
        case TypeRule::Duality: return "duality";
        case TypeRule::Type: return "type";
        case TypeRule::Ambiguous: return "ambiguous";
        case TypeRule::Arity: return "arity";
    }
    return "?";
}

std::string TypeError::str() const {
    std::ostringstream out;
    out << loc.line << ":" << loc.col << ": " << rule_name(rule) << ": " << message;
    return out.str();
}

bool promotion_guard(const TermPtr& t);

namespace {

struct ClauseFail {
    TypeError err;
};

[[noreturn]] void bail(SourceLoc loc, TypeRule rule, std::string msg) {
    throw ClauseFail{TypeError{loc, rule, std::move(msg)}};
}

bool is_meta(const std::string& name) { return !name.empty() && name[0] == '?'; }

std::optional<std::string> find_channel_prim(const TermPtr& t) {
    std::optional<std::string> found;
    std::function<void(const TermPtr&)> walk = [&](const TermPtr& u) {
        if (found) return;
        std::visit(overloaded{[&](const TermPrimRef& p) {
                                  if (is_channel_creating(p.name)) found = p.name;
                              },
                              [&](const TermLam& l) { walk(l.body); },
                              [&](const TermApp& a) {
                                  walk(a.fn);
                                  walk(a.arg);
                              },
                              [&](const TermLet& l) {
                                  walk(l.bound);
                                  walk(l.body);
                              },
                              [&](const TermPair& p) {
                                  walk(p.first);
                                  walk(p.second);
                              },
                              [&](const TermBinOp& b) {
                                  walk(b.lhs);
                                  walk(b.rhs);
                              },
                              [&](const TermBox& b) { walk(b.body); },
                              [&](const auto&) {}},
                   u->node);
    };
    walk(t);
    return found;
}

// ---------------------------------------------------------------------------
// Symbolic grades: concrete Grade values generalised with nat polynomials so
// that index-polymorphic definitions (grades like `n` or `m + 1`) check.
// ---------------------------------------------------------------------------

struct SymExt {
    bool inf = false;
    NatPoly p;

    static SymExt infinity() { return SymExt{true, {}}; }
    static SymExt of(NatPoly q) { return SymExt{false, std::move(q)}; }
};

struct SGrade {
    SemiringTag tag;
    NatPoly nat;  // NatS
    NatPoly lo;   // IntervalS
    SymExt hi;

    static SGrade nat_poly(NatPoly p) { return SGrade{SemiringTag::NatS, std::move(p), {}, {}}; }
    static SGrade interval(NatPoly l, SymExt h) {
        return SGrade{SemiringTag::IntervalS, {}, std::move(l), std::move(h)};
    }

    bool is_ground() const {
        if (tag == SemiringTag::NatS) return nat.is_constant();
        return lo.is_constant() && (hi.inf || hi.p.is_constant());
    }

    Grade to_grade() const {
        if (tag == SemiringTag::NatS) return Grade::nat((unsigned long)nat.constant);
        ExtNat h = hi.inf ? ExtNat::infinity() : ExtNat::of((unsigned long)hi.p.constant);
        return Grade::interval(ExtNat::of((unsigned long)lo.constant), h);
    }

    std::string str() const {
        if (tag == SemiringTag::NatS) return nat.str();
        return lo.str() + ".." + (hi.inf ? "Inf" : hi.p.str());
    }
};

SGrade sg_zero(SemiringTag tag) {
    return tag == SemiringTag::NatS ? SGrade::nat_poly(NatPoly::lit(0))
                                    : SGrade::interval(NatPoly::lit(0), SymExt::of(NatPoly::lit(0)));
}
SGrade sg_one(SemiringTag tag) {
    return tag == SemiringTag::NatS ? SGrade::nat_poly(NatPoly::lit(1))
                                    : SGrade::interval(NatPoly::lit(1), SymExt::of(NatPoly::lit(1)));
}

// Promote an exactly-counted ground grade into the interval semiring when the
// two meet (the embed_nat homomorphism).
std::optional<SGrade> sg_embed(const SGrade& g) {
    if (g.tag == SemiringTag::IntervalS) return g;
    if (!g.nat.is_constant()) return std::nullopt;
    return SGrade::interval(g.nat, SymExt::of(g.nat));
}

SGrade sg_add(const SGrade& a, const SGrade& b, SourceLoc loc) {
    if (a.tag != b.tag) {
        auto ea = sg_embed(a);
        auto eb = sg_embed(b);
        if (!ea || !eb) bail(loc, TypeRule::Semiring, "cannot add grades from different semirings");
        return sg_add(*ea, *eb, loc);
    }
    if (a.tag == SemiringTag::NatS) return SGrade::nat_poly(a.nat.plus(b.nat));
    SymExt hi = (a.hi.inf || b.hi.inf) ? SymExt::infinity() : SymExt::of(a.hi.p.plus(b.hi.p));
    return SGrade::interval(a.lo.plus(b.lo), hi);
}

SGrade sg_mul(const SGrade& a, const SGrade& b, SourceLoc loc) {
    if (a.tag != b.tag) {
        auto ea = sg_embed(a);
        auto eb = sg_embed(b);
        if (!ea || !eb)
            bail(loc, TypeRule::Semiring, "cannot multiply grades from different semirings");
        return sg_mul(*ea, *eb, loc);
    }
    auto times = [&](const NatPoly& x, const NatPoly& y) {
        auto r = x.times(y);
        if (!r)
            bail(loc, TypeRule::NatIndex,
                 "grade arithmetic is not linear: " + x.str() + " * " + y.str());
        return *r;
    };
    if (a.tag == SemiringTag::NatS) return SGrade::nat_poly(times(a.nat, b.nat));
    NatPoly lo = times(a.lo, b.lo);
    SymExt hi;
    auto definitely_zero = [](const SymExt& e) { return !e.inf && e.p.is_zero(); };
    if (definitely_zero(a.hi) || definitely_zero(b.hi))
        hi = SymExt::of(NatPoly::lit(0));
    else if (a.hi.inf || b.hi.inf)
        hi = SymExt::infinity();
    else
        hi = SymExt::of(times(a.hi.p, b.hi.p));
    return SGrade::interval(lo, hi);
}

// poly a <= poly b, when provable
bool poly_leq(const NatPoly& a, const NatPoly& b) { return b.minus(a).has_value(); }

bool sg_approx(const SGrade& usage, const SGrade& declared, SourceLoc loc) {
    if (usage.tag != declared.tag) {
        auto eu = sg_embed(usage);
        auto ed = sg_embed(declared);
        if (usage.tag == SemiringTag::NatS && eu && declared.tag == SemiringTag::IntervalS)
            return sg_approx(*eu, declared, loc);
        if (!eu || !ed)
            bail(loc, TypeRule::Semiring, "usage and declared grades are in different semirings");
        return sg_approx(*eu, *ed, loc);
    }
    if (usage.tag == SemiringTag::NatS) {
        if (usage.is_ground() && declared.is_ground())
            return grade_approx(usage.to_grade(), declared.to_grade());
        return usage.nat == declared.nat;
    }
    if (usage.is_ground() && declared.is_ground())
        return grade_approx(usage.to_grade(), declared.to_grade());
    // symbolic containment: declared.lo <= usage.lo and usage.hi <= declared.hi
    if (!poly_leq(declared.lo, usage.lo)) return false;
    if (declared.hi.inf) return true;
    if (usage.hi.inf) return false;
    return poly_leq(usage.hi.p, declared.hi.p);
}

std::optional<SGrade> sg_join(const SGrade& a, const SGrade& b, SourceLoc loc) {
    if (a.tag != b.tag) {
        auto ea = sg_embed(a);
        auto eb = sg_embed(b);
        if (!ea || !eb) bail(loc, TypeRule::Semiring, "cannot join grades from different semirings");
        return sg_join(*ea, *eb, loc);
    }
    if (a.is_ground() && b.is_ground()) {
        auto j = grade_join(a.to_grade(), b.to_grade());
        if (!j) return std::nullopt;
        if (j->tag() == SemiringTag::NatS) return SGrade::nat_poly(NatPoly::lit((long)j->nat_value()));
        NatPoly lo = NatPoly::lit((long)j->lo().finite());
        SymExt hi = j->hi().is_infinite() ? SymExt::infinity()
                                          : SymExt::of(NatPoly::lit((long)j->hi().finite()));
        return SGrade::interval(lo, hi);
    }
    // symbolic: defined only when both sides agree
    if (a.tag == SemiringTag::NatS) {
        if (a.nat == b.nat) return a;
        return std::nullopt;
    }
    if (a.lo == b.lo && a.hi.inf == b.hi.inf && (a.hi.inf || a.hi.p == b.hi.p)) return a;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Usage accounting: per-binder usage expressions, evaluated after all
// unification has settled.
// ---------------------------------------------------------------------------

struct UsageExpr;
using UsagePtr = std::shared_ptr<const UsageExpr>;

struct UsageExpr {
    enum Kind { Zero, One, Add, Join, Scale } kind;
    UsagePtr a, b;
    GradePtr factor;  // Scale
    SourceLoc loc;
};

UsagePtr usage_zero() {
    static UsagePtr z = std::make_shared<UsageExpr>(UsageExpr{UsageExpr::Zero, nullptr, nullptr,
                                                              nullptr, {}});
    return z;
}
UsagePtr usage_one(SourceLoc loc) {
    return std::make_shared<UsageExpr>(UsageExpr{UsageExpr::One, nullptr, nullptr, nullptr, loc});
}
UsagePtr usage_add(UsagePtr a, UsagePtr b, SourceLoc loc) {
    return std::make_shared<UsageExpr>(UsageExpr{UsageExpr::Add, std::move(a), std::move(b),
                                                 nullptr, loc});
}
UsagePtr usage_join(UsagePtr a, UsagePtr b, SourceLoc loc) {
    return std::make_shared<UsageExpr>(UsageExpr{UsageExpr::Join, std::move(a), std::move(b),
                                                 nullptr, loc});
}
UsagePtr usage_scale(GradePtr factor, UsagePtr u, SourceLoc loc) {
    return std::make_shared<UsageExpr>(UsageExpr{UsageExpr::Scale, std::move(u), nullptr,
                                                 std::move(factor), loc});
}

struct Report {
    std::map<int, UsagePtr> graded;
    std::map<int, SourceLoc> linear;
};

struct BinderInfo {
    int id = 0;
    std::string name;
    bool linear = true;
    TypePtr type;
    GradePtr grade;  // when graded
    SourceLoc loc;
};

// ---------------------------------------------------------------------------
// Clause checking state: contexts, unification, deferred obligations.
// ---------------------------------------------------------------------------

struct Globals {
    const SourceProgram* prog = nullptr;
    std::map<std::string, TypeScheme> defs;
    std::map<std::string, TypeScheme> ctors;
    std::map<std::string, TypeScheme> prims;
    std::map<std::string, size_t> data_arities;
};

struct Checker {
    const Globals& g;
    CheckOptions opts;
    Elaboration* elab;

    // unification state, reset per clause
    std::map<std::string, TypePtr> ty_sub;
    std::map<std::string, ProtoPtr> pr_sub;
    std::map<std::string, GradePtr> gr_sub;
    std::map<std::string, NatPoly> nat_sub;
    struct PendingEq {
        NatPoly lhs, rhs;
        SourceLoc loc;
    };
    std::vector<PendingEq> pending_eqs;
    struct PendingPred {
        std::string pred;
        ProtoPtr protocol;
        SourceLoc loc;
    };
    std::vector<PendingPred> pending_preds;
    struct DeferredGrade {
        std::string name;
        UsagePtr usage;
        GradePtr declared;
        SourceLoc loc;
    };
    std::vector<DeferredGrade> deferred;
    std::map<int, GradePtr> fork_sites;  // forkNonLinear term id -> its grade meta

    std::vector<BinderInfo> ctx;  // innermost last
    std::map<int, BinderInfo> binder_table;
    std::set<std::string> clause_rigids;  // refinable nat variables of this clause
    std::vector<Constraint> assumed;
    bool pattern_mode = false;
    int fresh_counter = 0;
    int next_binder = 0;

    explicit Checker(const Globals& globals, CheckOptions options, Elaboration* e)
        : g(globals), opts(options), elab(e) {}

    // --- fresh names -----------------------------------------------------

    std::string fresh(const char* prefix) {
        return std::string("?") + prefix + std::to_string(fresh_counter++);
    }
    TypePtr fresh_type() { return type_var(fresh("t")); }
    ProtoPtr fresh_proto() { return proto_var(fresh("p")); }
    NatPtr fresh_nat() { return nat_var(fresh("n")); }
    GradePtr fresh_grade() { return grade_var(fresh("g")); }

    // --- zonking -----------------------------------------------------------

    NatPoly zonk_poly(NatPoly p) const {
        // nat_sub is kept triangular: values never mention solved variables
        std::vector<std::pair<std::string, long>> pending(p.coeffs.begin(), p.coeffs.end());
        for (const auto& [v, c] : pending) {
            auto it = nat_sub.find(v);
            if (it != nat_sub.end()) p = p.substitute(v, it->second);
        }
        return p;
    }

    NatPtr nat_of_poly(const NatPoly& p) const {
        NatPtr out;
        auto append = [&](NatPtr piece) { out = out ? nat_sum(out, piece) : piece; };
        for (const auto& [v, c] : p.coeffs)
            for (long i = 0; i < c; ++i) append(nat_var(v));
        if (p.constant != 0 || !out) append(nat_lit(p.constant));
        return out;
    }

    NatPtr zonk(const NatPtr& n) const { return nat_of_poly(zonk_poly(poly_of(n))); }

    GradePtr resolve_grade(GradePtr g0) const {
        while (true) {
            auto* v = std::get_if<GradeVar>(&g0->node);
            if (!v || !is_meta(v->name)) return g0;
            auto it = gr_sub.find(v->name);
            if (it == gr_sub.end()) return g0;
            g0 = it->second;
        }
    }

    GradePtr zonk(const GradePtr& g0) const {
        GradePtr r = resolve_grade(g0);
        return std::visit(
            overloaded{[&](const GradeNat& n) { return grade_nat(zonk(n.value), r->loc); },
                       [&](const GradeInterval& iv) {
                           std::optional<NatPtr> hi;
                           if (iv.hi) hi = zonk(*iv.hi);
                           return grade_interval(zonk(iv.lo), hi, r->loc);
                       },
                       [&](const GradeVar&) { return r; },
                       [&](const GradeProd& pr) { return grade_prod(zonk(pr.lhs), zonk(pr.rhs)); }},
            r->node);
    }

    // Head-resolve a protocol: follow solved metas, push Dual to the leaves,
    // unfold Graded over concrete constructors.
    ProtoPtr presolve(ProtoPtr p) const {
        for (;;) {
            if (auto* v = std::get_if<ProtoVar>(&p->node)) {
                if (is_meta(v->name)) {
                    auto it = pr_sub.find(v->name);
                    if (it != pr_sub.end()) {
                        p = it->second;
                        continue;
                    }
                }
                return p;
            }
            if (auto* d = std::get_if<ProtoDual>(&p->node)) {
                ProtoPtr inner = presolve(d->inner);
                bool reduced = true;
                ProtoPtr next = std::visit(
                    overloaded{
                        [&](const ProtoSend& s) { return proto_recv(s.payload, proto_dual(s.cont)); },
                        [&](const ProtoRecv& r) { return proto_send(r.payload, proto_dual(r.cont)); },
                        [&](const ProtoSelect& s) {
                            return proto_offer(proto_dual(s.left), proto_dual(s.right));
                        },
                        [&](const ProtoOffer& o) {
                            return proto_select(proto_dual(o.left), proto_dual(o.right));
                        },
                        [&](const ProtoEnd&) { return proto_end(); },
                        [&](const ProtoDual& dd) { return dd.inner; },
                        [&](const ProtoGraded& gg) {
                            return proto_graded(gg.count, proto_dual(gg.inner));
                        },
                        [&](const ProtoVar&) {
                            reduced = false;
                            return proto_dual(inner);
                        }},
                    inner->node);
                if (!reduced) return next;
                p = next;
                continue;
            }
            if (auto* gr = std::get_if<ProtoGraded>(&p->node)) {
                ProtoPtr inner = presolve(gr->inner);
                NatPtr n = gr->count;
                auto boxed = [&](const TypePtr& a) { return type_box(a, grade_nat(n)); };
                bool reduced = true;
                ProtoPtr next = std::visit(
                    overloaded{
                        [&](const ProtoSend& s) {
                            return proto_send(boxed(s.payload), proto_graded(n, s.cont));
                        },
                        [&](const ProtoRecv& r) {
                            return proto_recv(boxed(r.payload), proto_graded(n, r.cont));
                        },
                        [&](const ProtoSelect& s) {
                            return proto_select(proto_graded(n, s.left), proto_graded(n, s.right));
                        },
                        [&](const ProtoOffer& o) {
                            return proto_offer(proto_graded(n, o.left), proto_graded(n, o.right));
                        },
                        [&](const ProtoEnd&) { return proto_end(); },
                        [&](const auto&) {
                            reduced = false;
                            return proto_graded(n, inner);
                        }},
                    inner->node);
                if (!reduced) return next;
                p = next;
                continue;
            }
            return p;
        }
    }

    ProtoPtr zonk(const ProtoPtr& p0) const {
        ProtoPtr p = presolve(p0);
        return std::visit(
            overloaded{
                [&](const ProtoSend& s) { return proto_send(zonk(s.payload), zonk(s.cont)); },
                [&](const ProtoRecv& r) { return proto_recv(zonk(r.payload), zonk(r.cont)); },
                [&](const ProtoSelect& s) { return proto_select(zonk(s.left), zonk(s.right)); },
                [&](const ProtoOffer& o) { return proto_offer(zonk(o.left), zonk(o.right)); },
                [&](const ProtoEnd&) { return proto_end(); },
                [&](const ProtoVar&) { return p; },
                [&](const ProtoDual& d) { return proto_dual(zonk(d.inner)); },
                [&](const ProtoGraded& gg) { return proto_graded(zonk(gg.count), zonk(gg.inner)); }},
            p->node);
    }

    TypePtr resolve_type(TypePtr t) const {
        while (true) {
            auto* v = std::get_if<TypeVar>(&t->node);
            if (!v || !is_meta(v->name)) return t;
            auto it = ty_sub.find(v->name);
            if (it == ty_sub.end()) return t;
            t = it->second;
        }
    }

    TypePtr zonk(const TypePtr& t0) const {
        TypePtr t = resolve_type(t0);
        return std::visit(
            overloaded{
                [&](const TypeVar&) { return t; },
                [&](const TypeBase&) { return t; },
                [&](const TypeFun& f) { return type_fun(zonk(f.param), zonk(f.result)); },
                [&](const TypePair& p) { return type_pair(zonk(p.first), zonk(p.second)); },
                [&](const TypeBox& b) { return type_box(zonk(b.payload), zonk(b.grade)); },
                [&](const TypeChan& c) { return type_chan(zonk(c.protocol)); },
                [&](const TypeVec& v) { return type_vec(zonk(v.length), zonk(v.element)); },
                [&](const TypeNat& n) { return type_nat(zonk(n.index)); },
                [&](const TypeData& d) {
                    std::vector<TypePtr> args;
                    for (const auto& a : d.args) args.push_back(zonk(a));
                    return type_data(d.name, std::move(args));
                }},
            t->node);
    }

    // --- occurs checks -------------------------------------------------------

    bool occurs_ty(const std::string& name, const TypePtr& t0) const {
        TypePtr t = resolve_type(t0);
        return std::visit(
            overloaded{[&](const TypeVar& v) { return v.name == name; },
                       [&](const TypeBase&) { return false; },
                       [&](const TypeFun& f) {
                           return occurs_ty(name, f.param) || occurs_ty(name, f.result);
                       },
                       [&](const TypePair& p) {
                           return occurs_ty(name, p.first) || occurs_ty(name, p.second);
                       },
                       [&](const TypeBox& b) { return occurs_ty(name, b.payload); },
                       [&](const TypeChan& c) { return occurs_ty_proto(name, c.protocol); },
                       [&](const TypeVec& v) { return occurs_ty(name, v.element); },
                       [&](const TypeNat&) { return false; },
                       [&](const TypeData& d) {
                           for (const auto& a : d.args)
                               if (occurs_ty(name, a)) return true;
                           return false;
                       }},
            t->node);
    }
    bool occurs_ty_proto(const std::string& name, const ProtoPtr& p0) const {
        ProtoPtr p = presolve(p0);
        return std::visit(
            overloaded{[&](const ProtoSend& s) {
                           return occurs_ty(name, s.payload) || occurs_ty_proto(name, s.cont);
                       },
                       [&](const ProtoRecv& r) {
                           return occurs_ty(name, r.payload) || occurs_ty_proto(name, r.cont);
                       },
                       [&](const ProtoSelect& s) {
                           return occurs_ty_proto(name, s.left) || occurs_ty_proto(name, s.right);
                       },
                       [&](const ProtoOffer& o) {
                           return occurs_ty_proto(name, o.left) || occurs_ty_proto(name, o.right);
                       },
                       [&](const ProtoDual& d) { return occurs_ty_proto(name, d.inner); },
                       [&](const ProtoGraded& gg) { return occurs_ty_proto(name, gg.inner); },
                       [&](const auto&) { return false; }},
            p->node);
    }
    bool occurs_pr(const std::string& name, const ProtoPtr& p0) const {
        ProtoPtr p = presolve(p0);
        return std::visit(
            overloaded{[&](const ProtoSend& s) { return occurs_pr_ty(name, s.payload) ||
                                                        occurs_pr(name, s.cont); },
                       [&](const ProtoRecv& r) { return occurs_pr_ty(name, r.payload) ||
                                                        occurs_pr(name, r.cont); },
                       [&](const ProtoSelect& s) {
                           return occurs_pr(name, s.left) || occurs_pr(name, s.right);
                       },
                       [&](const ProtoOffer& o) {
                           return occurs_pr(name, o.left) || occurs_pr(name, o.right);
                       },
                       [&](const ProtoVar& v) { return v.name == name; },
                       [&](const ProtoDual& d) { return occurs_pr(name, d.inner); },
                       [&](const ProtoGraded& gg) { return occurs_pr(name, gg.inner); },
                       [&](const auto&) { return false; }},
            p->node);
    }
    bool occurs_pr_ty(const std::string& name, const TypePtr& t0) const {
        TypePtr t = resolve_type(t0);
        return std::visit(
            overloaded{[&](const TypeFun& f) {
                           return occurs_pr_ty(name, f.param) || occurs_pr_ty(name, f.result);
                       },
                       [&](const TypePair& p) {
                           return occurs_pr_ty(name, p.first) || occurs_pr_ty(name, p.second);
                       },
                       [&](const TypeBox& b) { return occurs_pr_ty(name, b.payload); },
                       [&](const TypeChan& c) { return occurs_pr(name, c.protocol); },
                       [&](const TypeVec& v) { return occurs_pr_ty(name, v.element); },
                       [&](const TypeData& d) {
                           for (const auto& a : d.args)
                               if (occurs_pr_ty(name, a)) return true;
                           return false;
                       },
                       [&](const auto&) { return false; }},
            t->node);
    }

    // --- nat equations ---------------------------------------------------------

    bool nat_solvable(const std::string& v) const {
        return is_meta(v) || (pattern_mode && clause_rigids.count(v) > 0);
    }

    void record_nat(const std::string& v, NatPoly value, SourceLoc loc) {
        value = zonk_poly(value);
        if (value.mentions(v))
            bail(loc, TypeRule::NatIndex, "cyclic index constraint on '" + v + "'");
        for (auto& [k, existing] : nat_sub) existing = existing.substitute(v, value);
        nat_sub[v] = std::move(value);
    }

    void unify_nat(const NatPtr& a, const NatPtr& b, SourceLoc loc) {
        unify_nat_poly(poly_of(a), poly_of(b), loc);
    }

    void unify_nat_poly(NatPoly a, NatPoly b, SourceLoc loc) {
        a = zonk_poly(a);
        b = zonk_poly(b);
        auto solvable = [this](const std::string& v) { return nat_solvable(v); };
        NatEqOutcome out = solve_nat_eq(a, b, solvable);
        switch (out.kind) {
            case NatEqOutcome::Tautology: return;
            case NatEqOutcome::Unsat:
                bail(loc, TypeRule::NatIndex,
                     "cannot solve index constraint: " + a.str() + " = " + b.str());
            case NatEqOutcome::Stuck:
                pending_eqs.push_back({a, b, loc});
                return;
            case NatEqOutcome::Solved:
                record_nat(out.var, out.value, loc);
                retry_pending(loc);
                return;
        }
    }

    void retry_pending(SourceLoc) {
        bool progress = true;
        while (progress) {
            progress = false;
            auto eqs = std::move(pending_eqs);
            pending_eqs.clear();
            for (auto& eq : eqs) {
                NatPoly a = zonk_poly(eq.lhs);
                NatPoly b = zonk_poly(eq.rhs);
                auto solvable = [this](const std::string& v) { return nat_solvable(v); };
                NatEqOutcome out = solve_nat_eq(a, b, solvable);
                switch (out.kind) {
                    case NatEqOutcome::Tautology: progress = true; break;
                    case NatEqOutcome::Unsat:
                        bail(eq.loc, TypeRule::NatIndex,
                             "cannot solve index constraint: " + a.str() + " = " + b.str());
                    case NatEqOutcome::Stuck: pending_eqs.push_back(eq); break;
                    case NatEqOutcome::Solved:
                        record_nat(out.var, out.value, eq.loc);
                        progress = true;
                        break;
                }
            }
        }
    }

    // --- unification -----------------------------------------------------------

    void unify_grade(const GradePtr& a0, const GradePtr& b0, SourceLoc loc) {
        GradePtr a = resolve_grade(a0);
        GradePtr b = resolve_grade(b0);
        auto* av = std::get_if<GradeVar>(&a->node);
        auto* bv = std::get_if<GradeVar>(&b->node);
        if (av && is_meta(av->name)) {
            if (bv && bv->name == av->name) return;
            gr_sub[av->name] = b;
            return;
        }
        if (bv && is_meta(bv->name)) {
            gr_sub[bv->name] = a;
            return;
        }
        if (av || bv) {
            if (av && bv && av->name == bv->name) return;
            bail(loc, TypeRule::Grade,
                 "grade mismatch: " + pretty(zonk(a)) + " vs " + pretty(zonk(b)));
        }
        auto* an = std::get_if<GradeNat>(&a->node);
        auto* bn = std::get_if<GradeNat>(&b->node);
        auto* ai = std::get_if<GradeInterval>(&a->node);
        auto* bi = std::get_if<GradeInterval>(&b->node);
        if (an && bn) {
            unify_nat(an->value, bn->value, loc);
            return;
        }
        if (ai && bi) {
            unify_nat(ai->lo, bi->lo, loc);
            if (ai->hi.has_value() != bi->hi.has_value())
                bail(loc, TypeRule::Grade, "grade mismatch: a finite bound against Inf");
            if (ai->hi) unify_nat(*ai->hi, *bi->hi, loc);
            return;
        }
        if ((an && bi) || (ai && bn))
            bail(loc, TypeRule::Semiring,
                 "semiring mismatch: " + pretty(zonk(a)) + " vs " + pretty(zonk(b)));
        bail(loc, TypeRule::Grade, "grade mismatch: " + pretty(zonk(a)) + " vs " + pretty(zonk(b)));
    }

    [[noreturn]] void proto_mismatch(const ProtoPtr& a, const ProtoPtr& b, SourceLoc loc) {
        bail(loc, TypeRule::Duality,
             "protocol mismatch: " + pretty(zonk(a)) + " vs " + pretty(zonk(b)));
    }

    void bind_proto(const std::string& name, const ProtoPtr& p, SourceLoc loc) {
        if (occurs_pr(name, p))
            bail(loc, TypeRule::Duality, "cannot construct an infinite protocol for " + name);
        pr_sub[name] = p;
    }

    void unify_proto(const ProtoPtr& a0, const ProtoPtr& b0, SourceLoc loc) {
        ProtoPtr a = presolve(a0);
        ProtoPtr b = presolve(b0);

        auto* av = std::get_if<ProtoVar>(&a->node);
        auto* bv = std::get_if<ProtoVar>(&b->node);
        if (av && is_meta(av->name)) {
            if (bv && bv->name == av->name) return;
            bind_proto(av->name, b, loc);
            return;
        }
        if (bv && is_meta(bv->name)) {
            bind_proto(bv->name, a, loc);
            return;
        }
        if (av || bv) {
            if (av && bv && av->name == bv->name) return;
            proto_mismatch(a, b, loc);
        }

        // after presolve, Dual only wraps variables
        auto* ad = std::get_if<ProtoDual>(&a->node);
        auto* bd = std::get_if<ProtoDual>(&b->node);
        if (ad && bd) {
            unify_proto(ad->inner, bd->inner, loc);
            return;
        }
        if (ad || bd) {
            // Dual x = q  <=>  x = Dual q
            const ProtoPtr& wrapped = ad ? ad->inner : bd->inner;
            const ProtoPtr& other = ad ? b : a;
            unify_proto(wrapped, proto_dual(other), loc);
            return;
        }

        auto* ag = std::get_if<ProtoGraded>(&a->node);
        auto* bg = std::get_if<ProtoGraded>(&b->node);
        if (ag && bg) {
            unify_nat(ag->count, bg->count, loc);
            unify_proto(ag->inner, bg->inner, loc);
            return;
        }
        if (ag || bg) {
            const ProtoGraded& gg = ag ? *ag : *bg;
            const ProtoPtr& other = ag ? b : a;
            unify_graded(gg.count, gg.inner, other, loc);
            return;
        }

        if (a->node.index() != b->node.index()) proto_mismatch(a, b, loc);
        std::visit(overloaded{[&](const ProtoSend& s) {
                                  const auto& t = std::get<ProtoSend>(b->node);
                                  unify_type(s.payload, t.payload, loc);
                                  unify_proto(s.cont, t.cont, loc);
                              },
                              [&](const ProtoRecv& r) {
                                  const auto& t = std::get<ProtoRecv>(b->node);
                                  unify_type(r.payload, t.payload, loc);
                                  unify_proto(r.cont, t.cont, loc);
                              },
                              [&](const ProtoSelect& s) {
                                  const auto& t = std::get<ProtoSelect>(b->node);
                                  unify_proto(s.left, t.left, loc);
                                  unify_proto(s.right, t.right, loc);
                              },
                              [&](const ProtoOffer& o) {
                                  const auto& t = std::get<ProtoOffer>(b->node);
                                  unify_proto(o.left, t.left, loc);
                                  unify_proto(o.right, t.right, loc);
                              },
                              [&](const ProtoEnd&) {},
                              [&](const auto&) { proto_mismatch(a, b, loc); }},
                   a->node);
    }

    // Graded n x = q: invert the payload-grading table against q's structure.
    void unify_graded(const NatPtr& n, const ProtoPtr& x, const ProtoPtr& q0, SourceLoc loc) {
        ProtoPtr q = presolve(q0);
        if (auto* qv = std::get_if<ProtoVar>(&q->node)) {
            if (is_meta(qv->name)) {
                bind_proto(qv->name, proto_graded(n, x), loc);
                return;
            }
            proto_mismatch(proto_graded(n, x), q, loc);
        }
        std::visit(
            overloaded{
                [&](const ProtoSend& s) {
                    TypePtr payload_inner = fresh_type();
                    unify_type(s.payload, type_box(payload_inner, grade_nat(n)), loc);
                    ProtoPtr cont_inner = fresh_proto();
                    unify_proto(x, proto_send(payload_inner, cont_inner), loc);
                    unify_graded(n, cont_inner, s.cont, loc);
                },
                [&](const ProtoRecv& r) {
                    TypePtr payload_inner = fresh_type();
                    unify_type(r.payload, type_box(payload_inner, grade_nat(n)), loc);
                    ProtoPtr cont_inner = fresh_proto();
                    unify_proto(x, proto_recv(payload_inner, cont_inner), loc);
                    unify_graded(n, cont_inner, r.cont, loc);
                },
                [&](const ProtoSelect& s) {
                    ProtoPtr l = fresh_proto(), r = fresh_proto();
                    unify_proto(x, proto_select(l, r), loc);
                    unify_graded(n, l, s.left, loc);
                    unify_graded(n, r, s.right, loc);
                },
                [&](const ProtoOffer& o) {
                    ProtoPtr l = fresh_proto(), r = fresh_proto();
                    unify_proto(x, proto_offer(l, r), loc);
                    unify_graded(n, l, o.left, loc);
                    unify_graded(n, r, o.right, loc);
                },
                [&](const ProtoEnd&) { unify_proto(x, proto_end(), loc); },
                [&](const auto&) { proto_mismatch(proto_graded(n, x), q, loc); }},
            q->node);
    }

    void bind_type(const std::string& name, const TypePtr& t, SourceLoc loc) {
        if (occurs_ty(name, t))
            bail(loc, TypeRule::Type, "cannot construct an infinite type for " + name);
        ty_sub[name] = t;
    }

    void unify_type(const TypePtr& a0, const TypePtr& b0, SourceLoc loc) {
        TypePtr a = resolve_type(a0);
        TypePtr b = resolve_type(b0);
        auto* av = std::get_if<TypeVar>(&a->node);
        auto* bv = std::get_if<TypeVar>(&b->node);
        if (av && is_meta(av->name)) {
            if (bv && bv->name == av->name) return;
            bind_type(av->name, b, loc);
            return;
        }
        if (bv && is_meta(bv->name)) {
            bind_type(bv->name, a, loc);
            return;
        }
        if (av || bv) {
            if (av && bv && av->name == bv->name) return;
            bail(loc, TypeRule::Type,
                 "type mismatch: " + pretty(zonk(a)) + " vs " + pretty(zonk(b)));
        }
        if (a->node.index() != b->node.index())
            bail(loc, TypeRule::Type,
                 "type mismatch: " + pretty(zonk(a)) + " vs " + pretty(zonk(b)));
        std::visit(
            overloaded{
                [&](const TypeBase& x) {
                    if (x.base != std::get<TypeBase>(b->node).base)
                        bail(loc, TypeRule::Type,
                             "type mismatch: " + pretty(a) + " vs " + pretty(b));
                },
                [&](const TypeFun& f) {
                    const auto& h = std::get<TypeFun>(b->node);
                    unify_type(f.param, h.param, loc);
                    unify_type(f.result, h.result, loc);
                },
                [&](const TypePair& p) {
                    const auto& h = std::get<TypePair>(b->node);
                    unify_type(p.first, h.first, loc);
                    unify_type(p.second, h.second, loc);
                },
                [&](const TypeBox& x) {
                    const auto& h = std::get<TypeBox>(b->node);
                    unify_type(x.payload, h.payload, loc);
                    unify_grade(x.grade, h.grade, loc);
                },
                [&](const TypeChan& c) {
                    unify_proto(c.protocol, std::get<TypeChan>(b->node).protocol, loc);
                },
                [&](const TypeVec& v) {
                    const auto& h = std::get<TypeVec>(b->node);
                    unify_nat(v.length, h.length, loc);
                    unify_type(v.element, h.element, loc);
                },
                [&](const TypeNat& x) {
                    unify_nat(x.index, std::get<TypeNat>(b->node).index, loc);
                },
                [&](const TypeData& d) {
                    const auto& h = std::get<TypeData>(b->node);
                    if (d.name != h.name || d.args.size() != h.args.size())
                        bail(loc, TypeRule::Type,
                             "type mismatch: " + pretty(zonk(a)) + " vs " + pretty(zonk(b)));
                    for (size_t i = 0; i < d.args.size(); ++i)
                        unify_type(d.args[i], h.args[i], loc);
                },
                [&](const TypeVar&) {}},
            a->node);
    }

    // --- instantiation -------------------------------------------------------

    struct SchemeSubst {
        std::map<std::string, TypePtr> ty;
        std::map<std::string, ProtoPtr> pr;
        std::map<std::string, NatPtr> nat;
        std::map<std::string, GradePtr> gr;
    };

    NatPtr subst(const NatPtr& n, const SchemeSubst& s) const {
        return std::visit(overloaded{[&](const NatVar& v) -> NatPtr {
                                         auto it = s.nat.find(v.name);
                                         return it != s.nat.end() ? it->second : n;
                                     },
                                     [&](const NatLit&) { return n; },
                                     [&](const NatSum& x) {
                                         return nat_sum(subst(x.lhs, s), subst(x.rhs, s));
                                     }},
                          n->node);
    }
    GradePtr subst(const GradePtr& g0, const SchemeSubst& s) const {
        return std::visit(
            overloaded{[&](const GradeNat& x) { return grade_nat(subst(x.value, s)); },
                       [&](const GradeInterval& iv) {
                           std::optional<NatPtr> hi;
                           if (iv.hi) hi = subst(*iv.hi, s);
                           return grade_interval(subst(iv.lo, s), hi);
                       },
                       [&](const GradeVar& v) -> GradePtr {
                           auto it = s.gr.find(v.name);
                           return it != s.gr.end() ? it->second : g0;
                       },
                       [&](const GradeProd& pr) {
                           return grade_prod(subst(pr.lhs, s), subst(pr.rhs, s));
                       }},
            g0->node);
    }
    ProtoPtr subst(const ProtoPtr& p, const SchemeSubst& s) const {
        return std::visit(
            overloaded{
                [&](const ProtoSend& x) { return proto_send(subst(x.payload, s), subst(x.cont, s)); },
                [&](const ProtoRecv& x) { return proto_recv(subst(x.payload, s), subst(x.cont, s)); },
                [&](const ProtoSelect& x) {
                    return proto_select(subst(x.left, s), subst(x.right, s));
                },
                [&](const ProtoOffer& x) { return proto_offer(subst(x.left, s), subst(x.right, s)); },
                [&](const ProtoEnd&) { return p; },
                [&](const ProtoVar& v) -> ProtoPtr {
                    auto it = s.pr.find(v.name);
                    return it != s.pr.end() ? it->second : p;
                },
                [&](const ProtoDual& d) { return proto_dual(subst(d.inner, s)); },
                [&](const ProtoGraded& gg) {
                    return proto_graded(subst(gg.count, s), subst(gg.inner, s));
                }},
            p->node);
    }
    TypePtr subst(const TypePtr& t, const SchemeSubst& s) const {
        return std::visit(
            overloaded{
                [&](const TypeVar& v) -> TypePtr {
                    auto it = s.ty.find(v.name);
                    return it != s.ty.end() ? it->second : t;
                },
                [&](const TypeBase&) { return t; },
                [&](const TypeFun& f) { return type_fun(subst(f.param, s), subst(f.result, s)); },
                [&](const TypePair& p) { return type_pair(subst(p.first, s), subst(p.second, s)); },
                [&](const TypeBox& b) { return type_box(subst(b.payload, s), subst(b.grade, s)); },
                [&](const TypeChan& c) { return type_chan(subst(c.protocol, s)); },
                [&](const TypeVec& v) { return type_vec(subst(v.length, s), subst(v.element, s)); },
                [&](const TypeNat& n) { return type_nat(subst(n.index, s)); },
                [&](const TypeData& d) {
                    std::vector<TypePtr> args;
                    for (const auto& a : d.args) args.push_back(subst(a, s));
                    return type_data(d.name, std::move(args));
                }},
            t->node);
    }

    // Instantiate with fresh metas. In pattern position Nat binders become
    // fresh rigid variables (the match's existential indices).
    TypePtr instantiate(const TypeScheme& sc, SourceLoc loc, bool pattern_nats = false,
                        GradePtr* first_grade_meta = nullptr) {
        SchemeSubst s;
        for (const auto& b : sc.binders) {
            switch (b.kind) {
                case Kind::Type: s.ty[b.name] = fresh_type(); break;
                case Kind::Protocol: s.pr[b.name] = fresh_proto(); break;
                case Kind::Nat:
                    if (pattern_nats) {
                        std::string rigid = "k" + std::to_string(fresh_counter++) + "'";
                        clause_rigids.insert(rigid);
                        s.nat[b.name] = nat_var(rigid);
                    } else {
                        s.nat[b.name] = fresh_nat();
                    }
                    break;
                case Kind::Semiring: break;  // carried implicitly by grade metas
                case Kind::GradeOf: {
                    GradePtr gm = fresh_grade();
                    s.gr[b.name] = gm;
                    if (first_grade_meta && !*first_grade_meta) *first_grade_meta = gm;
                    break;
                }
            }
        }
        for (const auto& c : sc.constraints)
            pending_preds.push_back({c.pred, subst(c.protocol, s), loc});
        return subst(sc.body, s);
    }

    // --- contexts & reports -----------------------------------------------------

    BinderInfo* lookup(const std::string& name) {
        for (auto it = ctx.rbegin(); it != ctx.rend(); ++it)
            if (it->name == name) return &*it;
        return nullptr;
    }

    static Report empty_report() { return {}; }

    Report combine_seq(Report a, const Report& b) {
        for (const auto& [id, loc] : b.linear) {
            if (a.linear.count(id))
                bail(loc, TypeRule::Contraction,
                     "linear variable '" + binder_table[id].name + "' used more than once");
            a.linear[id] = loc;
        }
        for (const auto& [id, u] : b.graded) {
            auto it = a.graded.find(id);
            if (it == a.graded.end())
                a.graded[id] = u;
            else
                it->second = usage_add(it->second, u, u->loc);
        }
        return a;
    }

    Report combine_branch(const Report& a, const Report& b, SourceLoc loc) {
        if (a.linear.size() != b.linear.size() ||
            !std::equal(a.linear.begin(), a.linear.end(), b.linear.begin(),
                        [](const auto& x, const auto& y) { return x.first == y.first; })) {
            bail(loc, TypeRule::Linearity,
                 "branches must consume the same linear variables");
        }
        Report out;
        out.linear = a.linear;
        std::set<int> ids;
        for (const auto& [id, u] : a.graded) ids.insert(id);
        for (const auto& [id, u] : b.graded) ids.insert(id);
        for (int id : ids) {
            UsagePtr ua = a.graded.count(id) ? a.graded.at(id) : usage_zero();
            UsagePtr ub = b.graded.count(id) ? b.graded.at(id) : usage_zero();
            out.graded[id] = usage_join(ua, ub, loc);
        }
        return out;
    }

    Report scale_report(const GradePtr& factor, Report rep, SourceLoc loc) {
        if (!rep.linear.empty()) {
            int id = rep.linear.begin()->first;
            bail(loc, TypeRule::Linearity,
                 "cannot promote a term that consumes linear variable '" +
                     binder_table[id].name + "' (pr)");
        }
        for (auto& [id, u] : rep.graded) u = usage_scale(factor, u, loc);
        return rep;
    }

    // --- pattern binding ----------------------------------------------------------

    void bind_pattern(const PatPtr& pat, const TypePtr& ty, const GradePtr& ambient,
                      std::vector<BinderInfo>& out) {
        std::visit(
            overloaded{
                [&](const PatVar& v) {
                    BinderInfo b;
                    b.id = next_binder++;
                    b.name = v.name;
                    b.linear = (ambient == nullptr);
                    b.type = ty;
                    b.grade = ambient;
                    b.loc = pat->loc;
                    ctx.push_back(b);
                    binder_table[b.id] = b;
                    out.push_back(b);
                },
                [&](const PatWild&) {
                    if (!ambient)
                        bail(pat->loc, TypeRule::Linearity,
                             "wildcard pattern discards a linear value");
                    BinderInfo b;
                    b.id = next_binder++;
                    b.name = "_";
                    b.linear = false;
                    b.type = ty;
                    b.grade = ambient;
                    b.loc = pat->loc;
                    ctx.push_back(b);
                    binder_table[b.id] = b;
                    out.push_back(b);
                },
                [&](const PatUnit&) { unify_type(ty, type_base(BaseType::Unit), pat->loc); },
                [&](const PatPair& p) {
                    TypePtr a = fresh_type(), b = fresh_type();
                    unify_type(ty, type_pair(a, b), pat->loc);
                    bind_pattern(p.first, a, ambient, out);
                    bind_pattern(p.second, b, ambient, out);
                },
                [&](const PatBox& bx) {
                    TypePtr t = resolve_type(ty);
                    TypePtr payload;
                    GradePtr grade;
                    if (auto* box = std::get_if<TypeBox>(&t->node)) {
                        payload = box->payload;
                        grade = box->grade;
                    } else if (std::holds_alternative<TypeVar>(t->node) &&
                               is_meta(std::get<TypeVar>(t->node).name)) {
                        payload = fresh_type();
                        grade = fresh_grade();
                        unify_type(t, type_box(payload, grade), pat->loc);
                    } else {
                        bail(pat->loc, TypeRule::Type,
                             "box pattern against non-box type " + pretty(zonk(ty)));
                    }
                    GradePtr inner_ambient = ambient ? grade_prod(ambient, grade) : grade;
                    bind_pattern(bx.inner, payload, inner_ambient, out);
                },
                [&](const PatCon& c) {
                    auto it = g.ctors.find(c.name);
                    if (it == g.ctors.end())
                        bail(pat->loc, TypeRule::Scope, "unknown constructor '" + c.name + "'");
                    TypePtr ct = instantiate(it->second, pat->loc, /*pattern_nats=*/true);
                    std::vector<TypePtr> fields;
                    while (auto* f = std::get_if<TypeFun>(&resolve_type(ct)->node)) {
                        fields.push_back(f->param);
                        ct = f->result;
                    }
                    if (fields.size() != c.args.size())
                        bail(pat->loc, TypeRule::Arity,
                             "constructor '" + c.name + "' takes " +
                                 std::to_string(fields.size()) + " arguments, pattern has " +
                                 std::to_string(c.args.size()));
                    unify_type(ct, ty, pat->loc);
                    for (size_t i = 0; i < fields.size(); ++i)
                        bind_pattern(c.args[i], fields[i], ambient, out);
                },
                [&](const PatIntLit&) { unify_type(ty, type_base(BaseType::Int), pat->loc); }},
            pat->node);
    }

    // Scope exit: verify linear consumption on the spot, defer grade checks.
    void close_binders(Report& rep, const std::vector<BinderInfo>& binders) {
        for (const auto& b : binders) {
            if (b.linear) {
                auto it = rep.linear.find(b.id);
                if (it == rep.linear.end())
                    bail(b.loc, TypeRule::Linearity,
                         "linear variable '" + b.name + "' is never used");
                rep.linear.erase(it);
            } else {
                UsagePtr u = usage_zero();
                auto it = rep.graded.find(b.id);
                if (it != rep.graded.end()) {
                    u = it->second;
                    rep.graded.erase(it);
                }
                deferred.push_back({b.name, u, b.grade, b.loc});
            }
        }
        for (size_t i = 0; i < binders.size(); ++i) ctx.pop_back();
    }

    // --- grade evaluation -----------------------------------------------------------

    SGrade sgrade_of(const GradePtr& g0, SourceLoc loc) {
        GradePtr gz = zonk(g0);
        return std::visit(
            overloaded{
                [&](const GradeNat& n) { return SGrade::nat_poly(zonk_poly(poly_of(n.value))); },
                [&](const GradeInterval& iv) {
                    SymExt hi = iv.hi ? SymExt::of(zonk_poly(poly_of(*iv.hi))) : SymExt::infinity();
                    return SGrade::interval(zonk_poly(poly_of(iv.lo)), hi);
                },
                [&](const GradeVar& v) -> SGrade {
                    bail(loc, TypeRule::Ambiguous,
                         "ambiguous grade: '" + v.name + "' was never determined");
                },
                [&](const GradeProd& pr) {
                    return sg_mul(sgrade_of(pr.lhs, loc), sgrade_of(pr.rhs, loc), loc);
                }},
            gz->node);
    }

    SGrade eval_usage(const UsagePtr& u, SemiringTag tag) {
        if (!u) return sg_zero(tag);
        switch (u->kind) {
            case UsageExpr::Zero: return sg_zero(tag);
            case UsageExpr::One: return sg_one(tag);
            case UsageExpr::Add:
                return sg_add(eval_usage(u->a, tag), eval_usage(u->b, tag), u->loc);
            case UsageExpr::Join: {
                auto j = sg_join(eval_usage(u->a, tag), eval_usage(u->b, tag), u->loc);
                if (!j)
                    bail(u->loc, TypeRule::Grade,
                         "branch usages cannot be joined (grade join undefined)");
                return *j;
            }
            case UsageExpr::Scale: {
                SGrade f = sgrade_of(u->factor, u->loc);
                SGrade inner = eval_usage(u->a, tag);
                return sg_mul(f, inner, u->loc);
            }
        }
        return sg_zero(tag);
    }

    // --- bidirectional checking ---------------------------------------------------

    bool is_checky(const TermPtr& t) const {
        return std::holds_alternative<TermBox>(t->node) ||
               std::holds_alternative<TermLam>(t->node);
    }

    Report check_term(const TermPtr& t, const TypePtr& expected) {
        if (auto* lam = std::get_if<TermLam>(&t->node)) {
            TypePtr e = resolve_type(expected);
            if (auto* box = std::get_if<TypeBox>(&e->node))
                return implicit_promotion(t, box->payload, box->grade);
            if (std::holds_alternative<TypeVar>(e->node) &&
                is_meta(std::get<TypeVar>(e->node).name)) {
                TypePtr a = fresh_type(), b = fresh_type();
                unify_type(e, type_fun(a, b), t->loc);
                e = type_fun(a, b);
            }
            auto* f = std::get_if<TypeFun>(&resolve_type(e)->node);
            if (!f)
                bail(t->loc, TypeRule::Type,
                     "a function cannot have type " + pretty(zonk(expected)));
            std::vector<BinderInfo> binders;
            bind_pattern(lam->param, f->param, nullptr, binders);
            Report rep = check_term(lam->body, f->result);
            close_binders(rep, binders);
            return rep;
        }
        if (auto* box = std::get_if<TermBox>(&t->node)) {
            TypePtr e = resolve_type(expected);
            auto* bt = std::get_if<TypeBox>(&e->node);
            if (!bt) {
                if (std::holds_alternative<TypeVar>(e->node) &&
                    is_meta(std::get<TypeVar>(e->node).name))
                    bail(t->loc, TypeRule::Ambiguous,
                         "cannot determine the grade of this promotion");
                bail(t->loc, TypeRule::Type,
                     "promotion cannot have type " + pretty(zonk(expected)));
            }
            apply_guard(box->body, t->loc);
            Report inner = check_term(box->body, bt->payload);
            return scale_report(bt->grade, std::move(inner), t->loc);
        }
        if (auto* let = std::get_if<TermLet>(&t->node)) {
            Report rep1;
            TypePtr bound_ty;
            if (let->annot) {
                bound_ty = *let->annot;
                rep1 = check_term(let->bound, bound_ty);
            } else {
                auto [ty, rep] = synth_term(let->bound);
                bound_ty = ty;
                rep1 = std::move(rep);
            }
            std::vector<BinderInfo> binders;
            bind_pattern(let->pattern, bound_ty, nullptr, binders);
            Report rep2 = check_term(let->body, expected);
            close_binders(rep2, binders);
            return combine_seq(std::move(rep1), rep2);
        }
        if (auto* pair = std::get_if<TermPair>(&t->node)) {
            TypePtr e = resolve_type(expected);
            if (auto* box = std::get_if<TypeBox>(&e->node))
                return implicit_promotion(t, box->payload, box->grade);
            if (std::holds_alternative<TypeVar>(e->node) &&
                is_meta(std::get<TypeVar>(e->node).name)) {
                TypePtr a = fresh_type(), b = fresh_type();
                unify_type(e, type_pair(a, b), t->loc);
                e = type_pair(a, b);
            }
            auto* pt = std::get_if<TypePair>(&resolve_type(e)->node);
            if (!pt)
                bail(t->loc, TypeRule::Type, "a pair cannot have type " + pretty(zonk(expected)));
            Report ra = check_term(pair->first, pt->first);
            Report rb = check_term(pair->second, pt->second);
            return combine_seq(std::move(ra), rb);
        }
        auto [ty, rep] = synth_term(t);
        unify_type(ty, expected, t->loc);
        return rep;
    }

    Report implicit_promotion(const TermPtr& t, const TypePtr& payload, const GradePtr& grade) {
        apply_guard(t, t->loc);
        Report inner = check_term(t, payload);
        Report scaled = scale_report(grade, std::move(inner), t->loc);
        if (t->id >= 0 && elab) elab->implicit_box.insert(t->id);
        return scaled;
    }

    void apply_guard(const TermPtr& body, SourceLoc loc) {
        if (!opts.promotion_guard) return;
        if (auto prim = find_channel_prim(body))
            bail(loc, TypeRule::Promotion,
                 "cannot promote a term containing the channel-creating primitive '" + *prim +
                     "' (pr)");
    }

    std::pair<TypePtr, Report> synth_term(const TermPtr& t) {
        return std::visit(
            overloaded{
                [&](const TermVar& v) -> std::pair<TypePtr, Report> {
                    if (BinderInfo* b = lookup(v.name)) {
                        Report rep;
                        if (b->linear)
                            rep.linear[b->id] = t->loc;
                        else
                            rep.graded[b->id] = usage_one(t->loc);
                        return {b->type, rep};
                    }
                    auto it = g.defs.find(v.name);
                    if (it == g.defs.end())
                        bail(t->loc, TypeRule::Scope, "unbound variable '" + v.name + "'");
                    return {instantiate(it->second, t->loc), {}};
                },
                [&](const TermConRef& c) -> std::pair<TypePtr, Report> {
                    auto it = g.ctors.find(c.name);
                    if (it == g.ctors.end())
                        bail(t->loc, TypeRule::Scope, "unknown constructor '" + c.name + "'");
                    return {instantiate(it->second, t->loc), {}};
                },
                [&](const TermPrimRef& p) -> std::pair<TypePtr, Report> {
                    auto it = g.prims.find(p.name);
                    if (it == g.prims.end())
                        bail(t->loc, TypeRule::Scope, "unknown primitive '" + p.name + "'");
                    GradePtr grade_meta;
                    TypePtr ty = instantiate(it->second, t->loc, false, &grade_meta);
                    if (p.name == "forkNonLinear" && grade_meta && t->id >= 0)
                        fork_sites[t->id] = grade_meta;
                    return {ty, {}};
                },
                [&](const TermIntLit&) -> std::pair<TypePtr, Report> {
                    return {type_base(BaseType::Int), {}};
                },
                [&](const TermBoolLit&) -> std::pair<TypePtr, Report> {
                    return {type_base(BaseType::Bool), {}};
                },
                [&](const TermUnit&) -> std::pair<TypePtr, Report> {
                    return {type_base(BaseType::Unit), {}};
                },
                [&](const TermPair& p) -> std::pair<TypePtr, Report> {
                    auto [ta, ra] = synth_term(p.first);
                    auto [tb, rb] = synth_term(p.second);
                    return {type_pair(ta, tb), combine_seq(std::move(ra), rb)};
                },
                [&](const TermBinOp& b) -> std::pair<TypePtr, Report> {
                    Report rl = check_term(b.lhs, type_base(BaseType::Int));
                    Report rr = check_term(b.rhs, type_base(BaseType::Int));
                    TypePtr res = type_base(b.op == BinOp::Add ? BaseType::Int : BaseType::Bool);
                    return {res, combine_seq(std::move(rl), rr)};
                },
                [&](const TermLet& l) -> std::pair<TypePtr, Report> {
                    Report rep1;
                    TypePtr bound_ty;
                    if (l.annot) {
                        bound_ty = *l.annot;
                        rep1 = check_term(l.bound, bound_ty);
                    } else {
                        auto [ty, rep] = synth_term(l.bound);
                        bound_ty = ty;
                        rep1 = std::move(rep);
                    }
                    std::vector<BinderInfo> binders;
                    bind_pattern(l.pattern, bound_ty, nullptr, binders);
                    auto [tb, rep2] = synth_term(l.body);
                    close_binders(rep2, binders);
                    return {tb, combine_seq(std::move(rep1), rep2)};
                },
                [&](const TermApp&) { return synth_app(t); },
                [&](const TermLam&) -> std::pair<TypePtr, Report> {
                    bail(t->loc, TypeRule::Ambiguous,
                         "cannot synthesise the type of a bare lambda here");
                },
                [&](const TermBox&) -> std::pair<TypePtr, Report> {
                    bail(t->loc, TypeRule::Ambiguous,
                         "cannot determine the grade of this promotion");
                }},
            t->node);
    }

    std::pair<TypePtr, Report> synth_app(const TermPtr& t) {
        // flatten the spine
        std::vector<TermPtr> args;
        TermPtr head = t;
        while (auto* app = std::get_if<TermApp>(&head->node)) {
            args.push_back(app->arg);
            head = app->fn;
        }
        std::reverse(args.begin(), args.end());

        TypePtr fn_ty;
        Report rep;
        size_t start = 0;
        if (auto* lam = std::get_if<TermLam>(&head->node)) {
            // immediate application of a lambda: synthesise via the argument
            auto [arg_ty, arg_rep] = synth_term(args[0]);
            std::vector<BinderInfo> binders;
            bind_pattern(lam->param, arg_ty, nullptr, binders);
            auto [body_ty, body_rep] = synth_term(lam->body);
            close_binders(body_rep, binders);
            rep = combine_seq(std::move(arg_rep), body_rep);
            fn_ty = body_ty;
            start = 1;
        } else {
            auto [ty, head_rep] = synth_term(head);
            fn_ty = ty;
            rep = std::move(head_rep);
        }

        size_t n = args.size() - start;
        std::vector<TypePtr> params(n);
        for (size_t i = 0; i < n; ++i) {
            TypePtr r = resolve_type(fn_ty);
            if (auto* f = std::get_if<TypeFun>(&r->node)) {
                params[i] = f->param;
                fn_ty = f->result;
                continue;
            }
            if (std::holds_alternative<TypeVar>(r->node) &&
                is_meta(std::get<TypeVar>(r->node).name)) {
                TypePtr a = fresh_type(), b = fresh_type();
                unify_type(r, type_fun(a, b), args[start + i]->loc);
                params[i] = a;
                fn_ty = b;
                continue;
            }
            bail(args[start + i]->loc, TypeRule::Arity,
                 "cannot apply a value of type " + pretty(zonk(r)));
        }

        bool is_offer = std::holds_alternative<TermPrimRef>(head->node) &&
                        std::get<TermPrimRef>(head->node).name == "offer";
        if (is_offer) {
            if (n < 3)
                bail(t->loc, TypeRule::Arity, "offer must be applied to both branches and a channel");
            Report chan_rep = check_term(args[start + 2], params[2]);
            Report left_rep = check_term(args[start + 0], params[0]);
            Report right_rep = check_term(args[start + 1], params[1]);
            Report branches = combine_branch(left_rep, right_rep, t->loc);
            rep = combine_seq(std::move(rep), chan_rep);
            rep = combine_seq(std::move(rep), branches);
            for (size_t i = 3; i < n; ++i)
                rep = combine_seq(std::move(rep), check_term(args[start + i], params[i]));
            return {fn_ty, rep};
        }

        // synthesisable arguments first so their solutions reach the
        // promotions and lambdas that need them
        std::vector<size_t> order;
        for (size_t i = 0; i < n; ++i)
            if (!is_checky(args[start + i])) order.push_back(i);
        for (size_t i = 0; i < n; ++i)
            if (is_checky(args[start + i])) order.push_back(i);
        for (size_t i : order)
            rep = combine_seq(std::move(rep), check_term(args[start + i], params[i]));
        return {fn_ty, rep};
    }

    // --- clause driver ---------------------------------------------------------------

    void check_clause(const TopLevelDef& def, const Clause& clause) {
        // reset per-clause state
        ty_sub.clear();
        pr_sub.clear();
        gr_sub.clear();
        nat_sub.clear();
        pending_eqs.clear();
        pending_preds.clear();
        deferred.clear();
        fork_sites.clear();
        ctx.clear();
        binder_table.clear();
        clause_rigids.clear();
        assumed = def.scheme.constraints;
        fresh_counter = 0;
        next_binder = 0;

        for (const auto& b : def.scheme.binders)
            if (b.kind == Kind::Nat) clause_rigids.insert(b.name);

        TypePtr ty = def.scheme.body;
        std::vector<BinderInfo> binders;
        pattern_mode = true;
        for (const auto& pat : clause.params) {
            TypePtr r = resolve_type(ty);
            auto* f = std::get_if<TypeFun>(&r->node);
            if (!f)
                bail(pat->loc, TypeRule::Arity,
                     "clause of '" + def.name + "' has more patterns than the signature has arrows");
            bind_pattern(pat, f->param, nullptr, binders);
            ty = f->result;
        }
        pattern_mode = false;

        Report rep = check_term(clause.body, ty);
        close_binders(rep, binders);

        finalize(def, clause);
    }

    void finalize(const TopLevelDef& def, const Clause& clause) {
        retry_pending(clause.loc);
        if (!pending_eqs.empty()) {
            const auto& eq = pending_eqs.front();
            bail(eq.loc, TypeRule::NatIndex,
                 "unsolved index constraint: " + zonk_poly(eq.lhs).str() + " = " +
                     zonk_poly(eq.rhs).str());
        }

        for (const auto& d : deferred) {
            GradePtr declared = zonk(d.declared);
            SGrade dg = sgrade_of(declared, d.loc);
            SGrade usage = eval_usage(d.usage, dg.tag);
            if (!sg_approx(usage, dg, d.loc))
                bail(d.loc, TypeRule::Grade,
                     "variable '" + d.name + "' is used " + usage.str() +
                         " times but its grade allows " + dg.str());
        }

        for (const auto& p : pending_preds) {
            ProtoPtr proto = zonk(p.protocol);
            bool discharged = false;
            for (const auto& a : assumed)
                if (a.pred == p.pred && equal(a.protocol, proto)) {
                    discharged = true;
                    break;
                }
            if (discharged) continue;
            if (!proto_is_closed(proto))
                bail(p.loc, TypeRule::Ambiguous,
                     "constraint " + p.pred + " " + pretty(proto) +
                         " mentions an unresolved protocol");
            bool holds = p.pred == "SingleAction"   ? is_single_action(proto)
                         : p.pred == "ReceivePrefix" ? is_receive_prefix(proto)
                                                     : sends_only(proto);
            if (!holds)
                bail(p.loc, TypeRule::Constraint,
                     "constraint " + p.pred + " (" + pretty(proto) + ") does not hold");
        }

        if (elab) {
            for (const auto& [id, gm] : fork_sites) {
                GradePtr gz = zonk(gm);
                if (std::holds_alternative<GradeVar>(gz->node)) continue;
                SGrade sg = sgrade_of(gz, def.loc);
                if (!sg.is_ground()) continue;
                Grade grade = sg.to_grade();
                ExtNat upper = grade.tag() == SemiringTag::NatS
                                   ? ExtNat::of(grade.nat_value())
                                   : grade.hi();
                elab->fork_grade_upper[id] = upper;
            }
        }
        (void)clause;
    }
};

// ---------------------------------------------------------------------------
// Global tables.
// ---------------------------------------------------------------------------

const std::map<std::string, TypeScheme>& primitive_schemes() {
    static const std::map<std::string, TypeScheme> table = [] {
        std::map<std::string, TypeScheme> m;
        auto add = [&](const char* name, const char* sig) { m[name] = parse_scheme_string(sig); };
        add("send", "forall {a : Type, p : Protocol} . LChan (Send a p) -> a -> LChan p");
        add("recv", "forall {a : Type, p : Protocol} . LChan (Recv a p) -> (a, LChan p)");
        add("forkLinear", "forall {p : Protocol} . (LChan p -> ()) -> LChan (Dual p)");
        add("close", "LChan End -> ()");
        add("selectLeft", "forall {p1 p2 : Protocol} . LChan (Select p1 p2) -> LChan p1");
        add("selectRight", "forall {p1 p2 : Protocol} . LChan (Select p1 p2) -> LChan p2");
        add("offer",
            "forall {p1 p2 : Protocol, a : Type} . (LChan p1 -> a) -> (LChan p2 -> a) -> "
            "LChan (Offer p1 p2) -> a");
        add("forkNonLinear",
            "forall {p : Protocol, s : Semiring, r : s} . {SingleAction p} => "
            "((LChan p) [r] -> ()) -> (LChan (Dual p)) [r]");
        add("forkReplicate",
            "forall {p : Protocol, n : Nat} . {ReceivePrefix p} => "
            "(LChan p -> ()) [0..n] -> N n -> Vec n ((LChan (Dual p)) [0..1])");
        add("forkReplicateExactly",
            "forall {p : Protocol, n : Nat} . {ReceivePrefix p} => "
            "(LChan p -> ()) [n] -> N n -> Vec n (LChan (Dual p))");
        add("forkMulticast",
            "forall {p : Protocol, n : Nat} . {Sends p} => "
            "(Chan (Graded n p) -> ()) -> N n -> Vec n (Chan (Dual p))");
        add("par", "forall {a b : Type} . (() -> a) [1] -> (() -> b) [1] -> (a, b)");
        return m;
    }();
    return table;
}

const std::map<std::string, TypeScheme>& builtin_ctor_schemes() {
    static const std::map<std::string, TypeScheme> table = [] {
        std::map<std::string, TypeScheme> m;
        m["Nil"] = parse_scheme_string("forall {a : Type} . Vec 0 a");
        m["Cons"] = parse_scheme_string("forall {n : Nat, a : Type} . a -> Vec n a -> Vec (n + 1) a");
        m["Z"] = parse_scheme_string("N 0");
        m["S"] = parse_scheme_string("forall {n : Nat} . N n -> N (n + 1)");
        return m;
    }();
    return table;
}

}  // namespace

bool promotion_guard(const TermPtr& t) { return !find_channel_prim(t).has_value(); }

CheckResult check_program(const SourceProgram& program, const CheckOptions& opts) {
    CheckResult result;

    Globals g;
    g.prog = &program;
    g.prims = primitive_schemes();
    g.ctors = builtin_ctor_schemes();

    for (const auto& d : program.data_decls) {
        g.data_arities[d.name] = d.params.size();
        for (const auto& c : d.ctors) {
            if (g.ctors.count(c.name)) {
                result.errors.push_back(
                    {d.loc, TypeRule::Scope, "duplicate constructor '" + c.name + "'"});
                continue;
            }
            TypeScheme sc;
            for (const auto& p : d.params) sc.binders.push_back({p, Kind::Type, ""});
            std::vector<TypePtr> params;
            for (const auto& p : d.params) params.push_back(type_var(p));
            TypePtr res = type_data(d.name, params);
            TypePtr body = res;
            for (auto it = c.args.rbegin(); it != c.args.rend(); ++it)
                body = type_fun(*it, body);
            sc.body = body;
            g.ctors[c.name] = sc;
        }
    }
    for (const auto& def : program.defs) g.defs[def.name] = def.scheme;

    for (const auto& def : program.defs) {
        try {
            Checker checker(g, opts, &result.elab);
            for (const auto& clause : def.clauses) checker.check_clause(def, clause);
        } catch (const ClauseFail& f) {
            TypeError err = f.err;
            err.message = "in '" + def.name + "': " + err.message;
            result.errors.push_back(err);
        }
    }
    return result;
}

}  // namespace gsess
