#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gsess {

struct SourceLoc {
    int line = 0;
    int col = 0;
};

// ---------------------------------------------------------------------------
// Type-level naturals: variables, literals, sums (Vec indices, N indices,
// Nat-semiring grades).
// ---------------------------------------------------------------------------

struct NatExpr;
using NatPtr = std::shared_ptr<const NatExpr>;

struct NatVar {
    std::string name;
};
struct NatLit {
    long value = 0;
};
struct NatSum {
    NatPtr lhs;
    NatPtr rhs;
};

struct NatExpr {
    std::variant<NatVar, NatLit, NatSum> node;
    SourceLoc loc;
};

NatPtr nat_var(std::string name, SourceLoc loc = {});
NatPtr nat_lit(long value, SourceLoc loc = {});
NatPtr nat_sum(NatPtr lhs, NatPtr rhs, SourceLoc loc = {});

// ---------------------------------------------------------------------------
// Grades, syntactically. A single expression `[n]` is a Nat-semiring grade;
// `[a..b]` is an interval (hi absent = Inf); a grade variable `r` ranges over
// a semiring variable's elements. GradeProd only arises inside the checker
// (nested box patterns).
// ---------------------------------------------------------------------------

struct GradeExpr;
using GradePtr = std::shared_ptr<const GradeExpr>;

struct GradeNat {
    NatPtr value;
};
struct GradeInterval {
    NatPtr lo;
    std::optional<NatPtr> hi;  // nullopt = Inf
};
struct GradeVar {
    std::string name;
};
struct GradeProd {
    GradePtr lhs;
    GradePtr rhs;
};

struct GradeExpr {
    std::variant<GradeNat, GradeInterval, GradeVar, GradeProd> node;
    SourceLoc loc;
};

GradePtr grade_nat(NatPtr value, SourceLoc loc = {});
GradePtr grade_interval(NatPtr lo, std::optional<NatPtr> hi, SourceLoc loc = {});
GradePtr grade_var(std::string name, SourceLoc loc = {});
GradePtr grade_prod(GradePtr lhs, GradePtr rhs);

// ---------------------------------------------------------------------------
// Protocols (session types) and types, mutually recursive.
// ---------------------------------------------------------------------------

struct TypeExpr;
using TypePtr = std::shared_ptr<const TypeExpr>;
struct ProtocolExpr;
using ProtoPtr = std::shared_ptr<const ProtocolExpr>;

struct ProtoSend {
    TypePtr payload;
    ProtoPtr cont;
};
struct ProtoRecv {
    TypePtr payload;
    ProtoPtr cont;
};
struct ProtoSelect {
    ProtoPtr left;
    ProtoPtr right;
};
struct ProtoOffer {
    ProtoPtr left;
    ProtoPtr right;
};
struct ProtoEnd {};
struct ProtoVar {
    std::string name;
};
// Dual of a not-yet-known protocol; collapses once the argument is concrete.
struct ProtoDual {
    ProtoPtr inner;
};
// The payload-grading type function; collapses once index and argument are
// concrete.
struct ProtoGraded {
    NatPtr count;
    ProtoPtr inner;
};

struct ProtocolExpr {
    std::variant<ProtoSend, ProtoRecv, ProtoSelect, ProtoOffer, ProtoEnd, ProtoVar, ProtoDual,
                 ProtoGraded>
        node;
    SourceLoc loc;
};

ProtoPtr proto_send(TypePtr payload, ProtoPtr cont, SourceLoc loc = {});
ProtoPtr proto_recv(TypePtr payload, ProtoPtr cont, SourceLoc loc = {});
ProtoPtr proto_select(ProtoPtr left, ProtoPtr right, SourceLoc loc = {});
ProtoPtr proto_offer(ProtoPtr left, ProtoPtr right, SourceLoc loc = {});
ProtoPtr proto_end(SourceLoc loc = {});
ProtoPtr proto_var(std::string name, SourceLoc loc = {});
ProtoPtr proto_dual(ProtoPtr inner, SourceLoc loc = {});
ProtoPtr proto_graded(NatPtr count, ProtoPtr inner, SourceLoc loc = {});

enum class BaseType { Int, Bool, Unit };

struct TypeVar {
    std::string name;
};
struct TypeBase {
    BaseType base;
};
struct TypeFun {
    TypePtr param;
    TypePtr result;
};
struct TypePair {
    TypePtr first;
    TypePtr second;
};
struct TypeBox {
    TypePtr payload;
    GradePtr grade;
};
struct TypeChan {
    ProtoPtr protocol;
};
struct TypeVec {
    NatPtr length;
    TypePtr element;
};
// The singleton natural type `N n`.
struct TypeNat {
    NatPtr index;
};
struct TypeData {
    std::string name;
    std::vector<TypePtr> args;
};

struct TypeExpr {
    std::variant<TypeVar, TypeBase, TypeFun, TypePair, TypeBox, TypeChan, TypeVec, TypeNat,
                 TypeData>
        node;
    SourceLoc loc;
};

TypePtr type_var(std::string name, SourceLoc loc = {});
TypePtr type_base(BaseType base, SourceLoc loc = {});
TypePtr type_fun(TypePtr param, TypePtr result, SourceLoc loc = {});
TypePtr type_pair(TypePtr first, TypePtr second, SourceLoc loc = {});
TypePtr type_box(TypePtr payload, GradePtr grade, SourceLoc loc = {});
TypePtr type_chan(ProtoPtr protocol, SourceLoc loc = {});
TypePtr type_vec(NatPtr length, TypePtr element, SourceLoc loc = {});
TypePtr type_nat(NatPtr index, SourceLoc loc = {});
TypePtr type_data(std::string name, std::vector<TypePtr> args, SourceLoc loc = {});

// ---------------------------------------------------------------------------
// Kinds, schemes, constraints.
// ---------------------------------------------------------------------------

enum class Kind { Type, Protocol, Nat, Semiring, GradeOf };

struct Binder {
    std::string name;
    Kind kind;
    std::string semiring;  // set when kind == GradeOf: the semiring variable
};

struct Constraint {
    std::string pred;  // SingleAction | ReceivePrefix | Sends
    ProtoPtr protocol;
    SourceLoc loc;
};

struct TypeScheme {
    std::vector<Binder> binders;
    std::vector<Constraint> constraints;
    TypePtr body;
};

// ---------------------------------------------------------------------------
// Patterns.
// ---------------------------------------------------------------------------

struct Pattern;
using PatPtr = std::shared_ptr<const Pattern>;

struct PatVar {
    std::string name;
};
struct PatWild {};
struct PatUnit {};
struct PatPair {
    PatPtr first;
    PatPtr second;
};
struct PatBox {
    PatPtr inner;
};
struct PatCon {
    std::string name;
    std::vector<PatPtr> args;
};
struct PatIntLit {
    long value = 0;
};

struct Pattern {
    std::variant<PatVar, PatWild, PatUnit, PatPair, PatBox, PatCon, PatIntLit> node;
    SourceLoc loc;
};

PatPtr pat_var(std::string name, SourceLoc loc = {});
PatPtr pat_wild(SourceLoc loc = {});
PatPtr pat_unit(SourceLoc loc = {});
PatPtr pat_pair(PatPtr first, PatPtr second, SourceLoc loc = {});
PatPtr pat_box(PatPtr inner, SourceLoc loc = {});
PatPtr pat_con(std::string name, std::vector<PatPtr> args, SourceLoc loc = {});
PatPtr pat_int(long value, SourceLoc loc = {});

// ---------------------------------------------------------------------------
// Terms.
// ---------------------------------------------------------------------------

struct TermExpr;
using TermPtr = std::shared_ptr<const TermExpr>;

struct TermVar {
    std::string name;
};
struct TermLam {
    PatPtr param;
    TermPtr body;
};
struct TermApp {
    TermPtr fn;
    TermPtr arg;
};
struct TermLet {
    PatPtr pattern;
    std::optional<TypePtr> annot;
    TermPtr bound;
    TermPtr body;
};
struct TermPair {
    TermPtr first;
    TermPtr second;
};
struct TermUnit {};
struct TermIntLit {
    long value = 0;
};
struct TermBoolLit {
    bool value = false;
};
enum class BinOp { Add, Eq };
struct TermBinOp {
    BinOp op;
    TermPtr lhs;
    TermPtr rhs;
};
// Promotion `[t]`.
struct TermBox {
    TermPtr body;
};
struct TermConRef {
    std::string name;
};
struct TermPrimRef {
    std::string name;
};

struct TermExpr {
    std::variant<TermVar, TermLam, TermApp, TermLet, TermPair, TermUnit, TermIntLit, TermBoolLit,
                 TermBinOp, TermBox, TermConRef, TermPrimRef>
        node;
    SourceLoc loc;
    int id = -1;  // unique per parsed program; -1 for synthesized nodes
};

TermPtr term_var(std::string name, SourceLoc loc = {});
TermPtr term_lam(PatPtr param, TermPtr body, SourceLoc loc = {});
TermPtr term_app(TermPtr fn, TermPtr arg, SourceLoc loc = {});
TermPtr term_let(PatPtr pattern, std::optional<TypePtr> annot, TermPtr bound, TermPtr body,
                 SourceLoc loc = {});
TermPtr term_pair(TermPtr first, TermPtr second, SourceLoc loc = {});
TermPtr term_unit(SourceLoc loc = {});
TermPtr term_int(long value, SourceLoc loc = {});
TermPtr term_bool(bool value, SourceLoc loc = {});
TermPtr term_binop(BinOp op, TermPtr lhs, TermPtr rhs, SourceLoc loc = {});
TermPtr term_box(TermPtr body, SourceLoc loc = {});
TermPtr term_conref(std::string name, SourceLoc loc = {});
TermPtr term_primref(std::string name, SourceLoc loc = {});

// ---------------------------------------------------------------------------
// Top level.
// ---------------------------------------------------------------------------

struct Clause {
    std::vector<PatPtr> params;
    TermPtr body;
    SourceLoc loc;
};

struct TopLevelDef {
    std::string name;
    TypeScheme scheme;
    std::vector<Clause> clauses;
    SourceLoc loc;
};

struct DataCtor {
    std::string name;
    std::vector<TypePtr> args;
};

struct DataDecl {
    std::string name;
    std::vector<std::string> params;  // type parameters, all of kind Type
    std::vector<DataCtor> ctors;
    SourceLoc loc;
};

struct SourceProgram {
    std::vector<DataDecl> data_decls;
    std::vector<TopLevelDef> defs;

    const TopLevelDef* find_def(const std::string& name) const;
};

// The primitives the surface language exposes.
bool is_primitive_name(const std::string& name);
// Primitives whose evaluation creates channels (rejected under promotion).
bool is_channel_creating(const std::string& name);

// ---------------------------------------------------------------------------
// Structural equality, ignoring locations and node ids.
// ---------------------------------------------------------------------------

bool equal(const NatPtr& a, const NatPtr& b);
bool equal(const GradePtr& a, const GradePtr& b);
bool equal(const ProtoPtr& a, const ProtoPtr& b);
bool equal(const TypePtr& a, const TypePtr& b);
bool equal(const PatPtr& a, const PatPtr& b);
bool equal(const TermPtr& a, const TermPtr& b);
bool equal(const TypeScheme& a, const TypeScheme& b);
bool equal(const SourceProgram& a, const SourceProgram& b);

// `overloaded` visitor helper.
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace gsess
