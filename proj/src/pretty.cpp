#include "gsess/pretty.hpp"

#include <sstream>

namespace gsess {

namespace {

// Precedence contexts. A node parenthesises itself when its own level is
// below the context's.
constexpr int kExpr = 0, kEq = 1, kAdd = 2, kApp = 3, kAtom = 4;
constexpr int kTyFun = 0, kTyApp = 1, kTyAtom = 2;

std::string nat_str(const NatPtr& n, bool atom) {
    return std::visit(
        overloaded{[](const NatVar& v) { return v.name; },
                   [](const NatLit& l) { return std::to_string(l.value); },
                   [&](const NatSum& s) {
                       std::string out = nat_str(s.lhs, false) + " + " + nat_str(s.rhs, true);
                       return atom ? "(" + out + ")" : out;
                   }},
        n->node);
}

std::string grade_str(const GradePtr& g) {
    return std::visit(
        overloaded{[](const GradeNat& n) { return nat_str(n.value, false); },
                   [](const GradeInterval& iv) {
                       std::string hi = iv.hi ? nat_str(*iv.hi, false) : std::string("Inf");
                       return nat_str(iv.lo, false) + ".." + hi;
                   },
                   [](const GradeVar& v) { return v.name; },
                   [](const GradeProd& p) {
                       // checker-internal; only reachable from diagnostics
                       return grade_str(p.lhs) + "*" + grade_str(p.rhs);
                   }},
        g->node);
}

std::string type_str(const TypePtr& t, int ctx);

std::string proto_str(const ProtoPtr& p, int ctx) {
    auto wrap = [&](int own, const std::string& s) { return own < ctx ? "(" + s + ")" : s; };
    return std::visit(
        overloaded{
            [&](const ProtoSend& s) {
                return wrap(kTyApp, "Send " + type_str(s.payload, kTyAtom) + " " +
                                        proto_str(s.cont, kTyAtom));
            },
            [&](const ProtoRecv& r) {
                return wrap(kTyApp, "Recv " + type_str(r.payload, kTyAtom) + " " +
                                        proto_str(r.cont, kTyAtom));
            },
            [&](const ProtoSelect& s) {
                return wrap(kTyApp,
                            "Select " + proto_str(s.left, kTyAtom) + " " + proto_str(s.right, kTyAtom));
            },
            [&](const ProtoOffer& o) {
                return wrap(kTyApp,
                            "Offer " + proto_str(o.left, kTyAtom) + " " + proto_str(o.right, kTyAtom));
            },
            [&](const ProtoEnd&) { return std::string("End"); },
            [&](const ProtoVar& v) { return v.name; },
            [&](const ProtoDual& d) { return wrap(kTyApp, "Dual " + proto_str(d.inner, kTyAtom)); },
            [&](const ProtoGraded& g) {
                return wrap(kTyApp,
                            "Graded " + nat_str(g.count, true) + " " + proto_str(g.inner, kTyAtom));
            }},
        p->node);
}

std::string type_str(const TypePtr& t, int ctx) {
    auto wrap = [&](int own, const std::string& s) { return own < ctx ? "(" + s + ")" : s; };
    return std::visit(
        overloaded{
            [&](const TypeVar& v) { return v.name; },
            [&](const TypeBase& b) {
                switch (b.base) {
                    case BaseType::Int: return std::string("Int");
                    case BaseType::Bool: return std::string("Bool");
                    default: return std::string("()");
                }
            },
            [&](const TypeFun& f) {
                return wrap(kTyFun,
                            type_str(f.param, kTyApp) + " -> " + type_str(f.result, kTyFun));
            },
            [&](const TypePair& p) {
                return "(" + type_str(p.first, kTyFun) + ", " + type_str(p.second, kTyFun) + ")";
            },
            [&](const TypeBox& b) {
                return wrap(kTyApp, type_str(b.payload, kTyAtom) + " [" + grade_str(b.grade) + "]");
            },
            [&](const TypeChan& c) {
                return wrap(kTyApp, "LChan " + proto_str(c.protocol, kTyAtom));
            },
            [&](const TypeVec& v) {
                return wrap(kTyApp,
                            "Vec " + nat_str(v.length, true) + " " + type_str(v.element, kTyAtom));
            },
            [&](const TypeNat& n) { return wrap(kTyApp, "N " + nat_str(n.index, true)); },
            [&](const TypeData& d) {
                if (d.args.empty()) return d.name;
                std::string out = d.name;
                for (const auto& a : d.args) out += " " + type_str(a, kTyAtom);
                return wrap(kTyApp, out);
            }},
        t->node);
}

std::string pat_str(const PatPtr& p, bool atom) {
    return std::visit(
        overloaded{[](const PatVar& v) { return v.name; },
                   [](const PatWild&) { return std::string("_"); },
                   [](const PatUnit&) { return std::string("()"); },
                   [&](const PatPair& pr) {
                       return "(" + pat_str(pr.first, false) + ", " + pat_str(pr.second, false) +
                              ")";
                   },
                   [&](const PatBox& b) { return "[" + pat_str(b.inner, false) + "]"; },
                   [&](const PatCon& c) {
                       if (c.args.empty()) return c.name;
                       std::string out = c.name;
                       for (const auto& a : c.args) out += " " + pat_str(a, true);
                       return atom ? "(" + out + ")" : out;
                   },
                   [](const PatIntLit& l) { return std::to_string(l.value); }},
        p->node);
}

std::string term_str(const TermPtr& t, int ctx) {
    auto wrap = [&](int own, const std::string& s) { return own < ctx ? "(" + s + ")" : s; };
    return std::visit(
        overloaded{
            [&](const TermVar& v) { return v.name; },
            [&](const TermLam& l) {
                return wrap(kExpr,
                            "\\" + pat_str(l.param, true) + " -> " + term_str(l.body, kExpr));
            },
            [&](const TermApp& a) {
                return wrap(kApp, term_str(a.fn, kApp) + " " + term_str(a.arg, kAtom));
            },
            [&](const TermLet& l) {
                std::string out = "let " + pat_str(l.pattern, false);
                if (l.annot) out += " : " + type_str(*l.annot, kTyFun);
                out += " = " + term_str(l.bound, kExpr) + " in " + term_str(l.body, kExpr);
                return wrap(kExpr, out);
            },
            [&](const TermPair& p) {
                return "(" + term_str(p.first, kExpr) + ", " + term_str(p.second, kExpr) + ")";
            },
            [&](const TermUnit&) { return std::string("()"); },
            [&](const TermIntLit& l) { return std::to_string(l.value); },
            [&](const TermBoolLit& b) { return std::string(b.value ? "True" : "False"); },
            [&](const TermBinOp& b) {
                if (b.op == BinOp::Add)
                    return wrap(kAdd, term_str(b.lhs, kAdd) + " + " + term_str(b.rhs, kApp));
                return wrap(kEq, term_str(b.lhs, kAdd) + " == " + term_str(b.rhs, kAdd));
            },
            [&](const TermBox& b) { return "[" + term_str(b.body, kExpr) + "]"; },
            [&](const TermConRef& c) { return c.name; },
            [&](const TermPrimRef& p) { return p.name; }},
        t->node);
}

std::string kind_str(const Binder& b) {
    switch (b.kind) {
        case Kind::Type: return "Type";
        case Kind::Protocol: return "Protocol";
        case Kind::Nat: return "Nat";
        case Kind::Semiring: return "Semiring";
        case Kind::GradeOf: return b.semiring;
    }
    return "?";
}

std::string scheme_str(const TypeScheme& s) {
    std::ostringstream out;
    if (!s.binders.empty()) {
        out << "forall {";
        size_t i = 0;
        bool first_group = true;
        while (i < s.binders.size()) {
            size_t j = i;
            while (j < s.binders.size() && s.binders[j].kind == s.binders[i].kind &&
                   s.binders[j].semiring == s.binders[i].semiring)
                ++j;
            if (!first_group) out << ", ";
            first_group = false;
            for (size_t k = i; k < j; ++k) out << (k == i ? "" : " ") << s.binders[k].name;
            out << " : " << kind_str(s.binders[i]);
            i = j;
        }
        out << "} . ";
    }
    if (!s.constraints.empty()) {
        out << "{";
        for (size_t i = 0; i < s.constraints.size(); ++i) {
            if (i) out << ", ";
            out << s.constraints[i].pred << " " << proto_str(s.constraints[i].protocol, kTyAtom);
        }
        out << "} => ";
    }
    out << type_str(s.body, kTyFun);
    return out.str();
}

}  // namespace

std::string pretty(const NatPtr& n) { return nat_str(n, false); }
std::string pretty(const GradePtr& g) { return grade_str(g); }
std::string pretty(const ProtoPtr& p) { return proto_str(p, kTyFun); }
std::string pretty(const TypePtr& t) { return type_str(t, kTyFun); }
std::string pretty(const TypeScheme& s) { return scheme_str(s); }
std::string pretty(const PatPtr& p) { return pat_str(p, false); }
std::string pretty(const TermPtr& t) { return term_str(t, kExpr); }

std::string pretty_print(const SourceProgram& p) {
    std::ostringstream out;
    bool first = true;
    for (const auto& d : p.data_decls) {
        if (!first) out << "\n";
        first = false;
        out << "data " << d.name;
        for (const auto& param : d.params) out << " " << param;
        out << " = ";
        for (size_t i = 0; i < d.ctors.size(); ++i) {
            if (i) out << " | ";
            out << d.ctors[i].name;
            for (const auto& a : d.ctors[i].args) out << " " << type_str(a, kTyAtom);
        }
        out << "\n";
    }
    for (const auto& def : p.defs) {
        if (!first) out << "\n";
        first = false;
        out << def.name << " : " << scheme_str(def.scheme) << "\n";
        for (size_t i = 0; i < def.clauses.size(); ++i) {
            const auto& cl = def.clauses[i];
            out << def.name;
            for (const auto& pat : cl.params) out << " " << pat_str(pat, true);
            out << " = " << term_str(cl.body, kExpr);
            out << (i + 1 < def.clauses.size() ? ";\n" : "\n");
        }
    }
    return out.str();
}

}  // namespace gsess
