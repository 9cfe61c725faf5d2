#include "gsess/ast.hpp"

#include <algorithm>
#include <unordered_set>

namespace gsess {

NatPtr nat_var(std::string name, SourceLoc loc) {
    return std::make_shared<NatExpr>(NatExpr{NatVar{std::move(name)}, loc});
}
NatPtr nat_lit(long value, SourceLoc loc) {
    return std::make_shared<NatExpr>(NatExpr{NatLit{value}, loc});
}
NatPtr nat_sum(NatPtr lhs, NatPtr rhs, SourceLoc loc) {
    return std::make_shared<NatExpr>(NatExpr{NatSum{std::move(lhs), std::move(rhs)}, loc});
}

GradePtr grade_nat(NatPtr value, SourceLoc loc) {
    return std::make_shared<GradeExpr>(GradeExpr{GradeNat{std::move(value)}, loc});
}
GradePtr grade_interval(NatPtr lo, std::optional<NatPtr> hi, SourceLoc loc) {
    return std::make_shared<GradeExpr>(GradeExpr{GradeInterval{std::move(lo), std::move(hi)}, loc});
}
GradePtr grade_var(std::string name, SourceLoc loc) {
    return std::make_shared<GradeExpr>(GradeExpr{GradeVar{std::move(name)}, loc});
}
GradePtr grade_prod(GradePtr lhs, GradePtr rhs) {
    return std::make_shared<GradeExpr>(GradeExpr{GradeProd{std::move(lhs), std::move(rhs)}, {}});
}

ProtoPtr proto_send(TypePtr payload, ProtoPtr cont, SourceLoc loc) {
    return std::make_shared<ProtocolExpr>(
        ProtocolExpr{ProtoSend{std::move(payload), std::move(cont)}, loc});
}
ProtoPtr proto_recv(TypePtr payload, ProtoPtr cont, SourceLoc loc) {
    return std::make_shared<ProtocolExpr>(
        ProtocolExpr{ProtoRecv{std::move(payload), std::move(cont)}, loc});
}
ProtoPtr proto_select(ProtoPtr left, ProtoPtr right, SourceLoc loc) {
    return std::make_shared<ProtocolExpr>(
        ProtocolExpr{ProtoSelect{std::move(left), std::move(right)}, loc});
}
ProtoPtr proto_offer(ProtoPtr left, ProtoPtr right, SourceLoc loc) {
    return std::make_shared<ProtocolExpr>(
        ProtocolExpr{ProtoOffer{std::move(left), std::move(right)}, loc});
}
ProtoPtr proto_end(SourceLoc loc) {
    return std::make_shared<ProtocolExpr>(ProtocolExpr{ProtoEnd{}, loc});
}
ProtoPtr proto_var(std::string name, SourceLoc loc) {
    return std::make_shared<ProtocolExpr>(ProtocolExpr{ProtoVar{std::move(name)}, loc});
}
ProtoPtr proto_dual(ProtoPtr inner, SourceLoc loc) {
    return std::make_shared<ProtocolExpr>(ProtocolExpr{ProtoDual{std::move(inner)}, loc});
}
ProtoPtr proto_graded(NatPtr count, ProtoPtr inner, SourceLoc loc) {
    return std::make_shared<ProtocolExpr>(
        ProtocolExpr{ProtoGraded{std::move(count), std::move(inner)}, loc});
}

TypePtr type_var(std::string name, SourceLoc loc) {
    return std::make_shared<TypeExpr>(TypeExpr{TypeVar{std::move(name)}, loc});
}
TypePtr type_base(BaseType base, SourceLoc loc) {
    return std::make_shared<TypeExpr>(TypeExpr{TypeBase{base}, loc});
}
TypePtr type_fun(TypePtr param, TypePtr result, SourceLoc loc) {
    return std::make_shared<TypeExpr>(TypeExpr{TypeFun{std::move(param), std::move(result)}, loc});
}
TypePtr type_pair(TypePtr first, TypePtr second, SourceLoc loc) {
    return std::make_shared<TypeExpr>(
        TypeExpr{TypePair{std::move(first), std::move(second)}, loc});
}
TypePtr type_box(TypePtr payload, GradePtr grade, SourceLoc loc) {
    return std::make_shared<TypeExpr>(TypeExpr{TypeBox{std::move(payload), std::move(grade)}, loc});
}
TypePtr type_chan(ProtoPtr protocol, SourceLoc loc) {
    return std::make_shared<TypeExpr>(TypeExpr{TypeChan{std::move(protocol)}, loc});
}
TypePtr type_vec(NatPtr length, TypePtr element, SourceLoc loc) {
    return std::make_shared<TypeExpr>(
        TypeExpr{TypeVec{std::move(length), std::move(element)}, loc});
}
TypePtr type_nat(NatPtr index, SourceLoc loc) {
    return std::make_shared<TypeExpr>(TypeExpr{TypeNat{std::move(index)}, loc});
}
TypePtr type_data(std::string name, std::vector<TypePtr> args, SourceLoc loc) {
    return std::make_shared<TypeExpr>(TypeExpr{TypeData{std::move(name), std::move(args)}, loc});
}

PatPtr pat_var(std::string name, SourceLoc loc) {
    return std::make_shared<Pattern>(Pattern{PatVar{std::move(name)}, loc});
}
PatPtr pat_wild(SourceLoc loc) { return std::make_shared<Pattern>(Pattern{PatWild{}, loc}); }
PatPtr pat_unit(SourceLoc loc) { return std::make_shared<Pattern>(Pattern{PatUnit{}, loc}); }
PatPtr pat_pair(PatPtr first, PatPtr second, SourceLoc loc) {
    return std::make_shared<Pattern>(Pattern{PatPair{std::move(first), std::move(second)}, loc});
}
PatPtr pat_box(PatPtr inner, SourceLoc loc) {
    return std::make_shared<Pattern>(Pattern{PatBox{std::move(inner)}, loc});
}
PatPtr pat_con(std::string name, std::vector<PatPtr> args, SourceLoc loc) {
    return std::make_shared<Pattern>(Pattern{PatCon{std::move(name), std::move(args)}, loc});
}
PatPtr pat_int(long value, SourceLoc loc) {
    return std::make_shared<Pattern>(Pattern{PatIntLit{value}, loc});
}

namespace {
TermPtr mk_term(TermExpr t) { return std::make_shared<TermExpr>(std::move(t)); }
}  // namespace

TermPtr term_var(std::string name, SourceLoc loc) {
    return mk_term({TermVar{std::move(name)}, loc});
}
TermPtr term_lam(PatPtr param, TermPtr body, SourceLoc loc) {
    return mk_term({TermLam{std::move(param), std::move(body)}, loc});
}
TermPtr term_app(TermPtr fn, TermPtr arg, SourceLoc loc) {
    return mk_term({TermApp{std::move(fn), std::move(arg)}, loc});
}
TermPtr term_let(PatPtr pattern, std::optional<TypePtr> annot, TermPtr bound, TermPtr body,
                 SourceLoc loc) {
    return mk_term({TermLet{std::move(pattern), std::move(annot), std::move(bound), std::move(body)},
                    loc});
}
TermPtr term_pair(TermPtr first, TermPtr second, SourceLoc loc) {
    return mk_term({TermPair{std::move(first), std::move(second)}, loc});
}
TermPtr term_unit(SourceLoc loc) { return mk_term({TermUnit{}, loc}); }
TermPtr term_int(long value, SourceLoc loc) { return mk_term({TermIntLit{value}, loc}); }
TermPtr term_bool(bool value, SourceLoc loc) { return mk_term({TermBoolLit{value}, loc}); }
TermPtr term_binop(BinOp op, TermPtr lhs, TermPtr rhs, SourceLoc loc) {
    return mk_term({TermBinOp{op, std::move(lhs), std::move(rhs)}, loc});
}
TermPtr term_box(TermPtr body, SourceLoc loc) { return mk_term({TermBox{std::move(body)}, loc}); }
TermPtr term_conref(std::string name, SourceLoc loc) {
    return mk_term({TermConRef{std::move(name)}, loc});
}
TermPtr term_primref(std::string name, SourceLoc loc) {
    return mk_term({TermPrimRef{std::move(name)}, loc});
}

const TopLevelDef* SourceProgram::find_def(const std::string& name) const {
    for (const auto& d : defs)
        if (d.name == name) return &d;
    return nullptr;
}

bool is_primitive_name(const std::string& name) {
    static const std::unordered_set<std::string> prims = {
        "send",          "recv",          "close",
        "forkLinear",    "selectLeft",    "selectRight",
        "offer",         "forkNonLinear", "forkReplicate",
        "forkReplicateExactly",           "forkMulticast",
        "par"};
    return prims.count(name) > 0;
}

bool is_channel_creating(const std::string& name) {
    static const std::unordered_set<std::string> creators = {
        "forkLinear", "forkNonLinear", "forkReplicate", "forkReplicateExactly", "forkMulticast",
        "par"};
    return creators.count(name) > 0;
}

// --- structural equality -----------------------------------------------

bool equal(const NatPtr& a, const NatPtr& b) {
    if (!a || !b) return a == b;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const NatVar& x) { return x.name == std::get<NatVar>(b->node).name; },
            [&](const NatLit& x) { return x.value == std::get<NatLit>(b->node).value; },
            [&](const NatSum& x) {
                const auto& y = std::get<NatSum>(b->node);
                return equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
            }},
        a->node);
}

bool equal(const GradePtr& a, const GradePtr& b) {
    if (!a || !b) return a == b;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const GradeNat& x) { return equal(x.value, std::get<GradeNat>(b->node).value); },
            [&](const GradeInterval& x) {
                const auto& y = std::get<GradeInterval>(b->node);
                if (x.hi.has_value() != y.hi.has_value()) return false;
                if (!equal(x.lo, y.lo)) return false;
                return !x.hi || equal(*x.hi, *y.hi);
            },
            [&](const GradeVar& x) { return x.name == std::get<GradeVar>(b->node).name; },
            [&](const GradeProd& x) {
                const auto& y = std::get<GradeProd>(b->node);
                return equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
            }},
        a->node);
}

bool equal(const ProtoPtr& a, const ProtoPtr& b) {
    if (!a || !b) return a == b;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const ProtoSend& x) {
                const auto& y = std::get<ProtoSend>(b->node);
                return equal(x.payload, y.payload) && equal(x.cont, y.cont);
            },
            [&](const ProtoRecv& x) {
                const auto& y = std::get<ProtoRecv>(b->node);
                return equal(x.payload, y.payload) && equal(x.cont, y.cont);
            },
            [&](const ProtoSelect& x) {
                const auto& y = std::get<ProtoSelect>(b->node);
                return equal(x.left, y.left) && equal(x.right, y.right);
            },
            [&](const ProtoOffer& x) {
                const auto& y = std::get<ProtoOffer>(b->node);
                return equal(x.left, y.left) && equal(x.right, y.right);
            },
            [&](const ProtoEnd&) { return true; },
            [&](const ProtoVar& x) { return x.name == std::get<ProtoVar>(b->node).name; },
            [&](const ProtoDual& x) { return equal(x.inner, std::get<ProtoDual>(b->node).inner); },
            [&](const ProtoGraded& x) {
                const auto& y = std::get<ProtoGraded>(b->node);
                return equal(x.count, y.count) && equal(x.inner, y.inner);
            }},
        a->node);
}

bool equal(const TypePtr& a, const TypePtr& b) {
    if (!a || !b) return a == b;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const TypeVar& x) { return x.name == std::get<TypeVar>(b->node).name; },
            [&](const TypeBase& x) { return x.base == std::get<TypeBase>(b->node).base; },
            [&](const TypeFun& x) {
                const auto& y = std::get<TypeFun>(b->node);
                return equal(x.param, y.param) && equal(x.result, y.result);
            },
            [&](const TypePair& x) {
                const auto& y = std::get<TypePair>(b->node);
                return equal(x.first, y.first) && equal(x.second, y.second);
            },
            [&](const TypeBox& x) {
                const auto& y = std::get<TypeBox>(b->node);
                return equal(x.payload, y.payload) && equal(x.grade, y.grade);
            },
            [&](const TypeChan& x) {
                return equal(x.protocol, std::get<TypeChan>(b->node).protocol);
            },
            [&](const TypeVec& x) {
                const auto& y = std::get<TypeVec>(b->node);
                return equal(x.length, y.length) && equal(x.element, y.element);
            },
            [&](const TypeNat& x) { return equal(x.index, std::get<TypeNat>(b->node).index); },
            [&](const TypeData& x) {
                const auto& y = std::get<TypeData>(b->node);
                if (x.name != y.name || x.args.size() != y.args.size()) return false;
                for (size_t i = 0; i < x.args.size(); ++i)
                    if (!equal(x.args[i], y.args[i])) return false;
                return true;
            }},
        a->node);
}

bool equal(const PatPtr& a, const PatPtr& b) {
    if (!a || !b) return a == b;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const PatVar& x) { return x.name == std::get<PatVar>(b->node).name; },
            [&](const PatWild&) { return true; },
            [&](const PatUnit&) { return true; },
            [&](const PatPair& x) {
                const auto& y = std::get<PatPair>(b->node);
                return equal(x.first, y.first) && equal(x.second, y.second);
            },
            [&](const PatBox& x) { return equal(x.inner, std::get<PatBox>(b->node).inner); },
            [&](const PatCon& x) {
                const auto& y = std::get<PatCon>(b->node);
                if (x.name != y.name || x.args.size() != y.args.size()) return false;
                for (size_t i = 0; i < x.args.size(); ++i)
                    if (!equal(x.args[i], y.args[i])) return false;
                return true;
            },
            [&](const PatIntLit& x) { return x.value == std::get<PatIntLit>(b->node).value; }},
        a->node);
}

bool equal(const TermPtr& a, const TermPtr& b) {
    if (!a || !b) return a == b;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const TermVar& x) { return x.name == std::get<TermVar>(b->node).name; },
            [&](const TermLam& x) {
                const auto& y = std::get<TermLam>(b->node);
                return equal(x.param, y.param) && equal(x.body, y.body);
            },
            [&](const TermApp& x) {
                const auto& y = std::get<TermApp>(b->node);
                return equal(x.fn, y.fn) && equal(x.arg, y.arg);
            },
            [&](const TermLet& x) {
                const auto& y = std::get<TermLet>(b->node);
                if (x.annot.has_value() != y.annot.has_value()) return false;
                if (x.annot && !equal(*x.annot, *y.annot)) return false;
                return equal(x.pattern, y.pattern) && equal(x.bound, y.bound) &&
                       equal(x.body, y.body);
            },
            [&](const TermPair& x) {
                const auto& y = std::get<TermPair>(b->node);
                return equal(x.first, y.first) && equal(x.second, y.second);
            },
            [&](const TermUnit&) { return true; },
            [&](const TermIntLit& x) { return x.value == std::get<TermIntLit>(b->node).value; },
            [&](const TermBoolLit& x) { return x.value == std::get<TermBoolLit>(b->node).value; },
            [&](const TermBinOp& x) {
                const auto& y = std::get<TermBinOp>(b->node);
                return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
            },
            [&](const TermBox& x) { return equal(x.body, std::get<TermBox>(b->node).body); },
            [&](const TermConRef& x) { return x.name == std::get<TermConRef>(b->node).name; },
            [&](const TermPrimRef& x) { return x.name == std::get<TermPrimRef>(b->node).name; }},
        a->node);
}

bool equal(const TypeScheme& a, const TypeScheme& b) {
    if (a.binders.size() != b.binders.size()) return false;
    for (size_t i = 0; i < a.binders.size(); ++i) {
        const auto& x = a.binders[i];
        const auto& y = b.binders[i];
        if (x.name != y.name || x.kind != y.kind || x.semiring != y.semiring) return false;
    }
    if (a.constraints.size() != b.constraints.size()) return false;
    for (size_t i = 0; i < a.constraints.size(); ++i) {
        if (a.constraints[i].pred != b.constraints[i].pred) return false;
        if (!equal(a.constraints[i].protocol, b.constraints[i].protocol)) return false;
    }
    return equal(a.body, b.body);
}

bool equal(const SourceProgram& a, const SourceProgram& b) {
    if (a.data_decls.size() != b.data_decls.size() || a.defs.size() != b.defs.size()) return false;
    for (size_t i = 0; i < a.data_decls.size(); ++i) {
        const auto& x = a.data_decls[i];
        const auto& y = b.data_decls[i];
        if (x.name != y.name || x.params != y.params || x.ctors.size() != y.ctors.size())
            return false;
        for (size_t j = 0; j < x.ctors.size(); ++j) {
            if (x.ctors[j].name != y.ctors[j].name) return false;
            if (x.ctors[j].args.size() != y.ctors[j].args.size()) return false;
            for (size_t k = 0; k < x.ctors[j].args.size(); ++k)
                if (!equal(x.ctors[j].args[k], y.ctors[j].args[k])) return false;
        }
    }
    for (size_t i = 0; i < a.defs.size(); ++i) {
        const auto& x = a.defs[i];
        const auto& y = b.defs[i];
        if (x.name != y.name || !equal(x.scheme, y.scheme)) return false;
        if (x.clauses.size() != y.clauses.size()) return false;
        for (size_t j = 0; j < x.clauses.size(); ++j) {
            if (x.clauses[j].params.size() != y.clauses[j].params.size()) return false;
            for (size_t k = 0; k < x.clauses[j].params.size(); ++k)
                if (!equal(x.clauses[j].params[k], y.clauses[j].params[k])) return false;
            if (!equal(x.clauses[j].body, y.clauses[j].body)) return false;
        }
    }
    return true;
}

}  // namespace gsess
