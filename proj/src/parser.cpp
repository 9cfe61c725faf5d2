#include "gsess/parser.hpp"

#include <map>
#include <set>

namespace gsess {

namespace {

// Kind environment for the scheme currently being parsed.
struct KindEnv {
    std::map<std::string, Binder> vars;

    const Binder* find(const std::string& name) const {
        auto it = vars.find(name);
        return it == vars.end() ? nullptr : &it->second;
    }
};

struct Parser {
    explicit Parser(const std::string& text) : toks(lex(text)) {}

    std::vector<Token> toks;
    size_t pos = 0;
    int next_term_id = 0;
    // user data declarations seen so far: name -> arity
    std::map<std::string, size_t> data_arity;
    // binder kinds of the definition whose clauses are being parsed, for
    // type annotations inside let bindings
    KindEnv cur;

    const Token& peek(size_t ahead = 0) const {
        size_t i = pos + ahead;
        return i < toks.size() ? toks[i] : toks.back();
    }
    bool at(Tok k) const { return peek().kind == k; }
    Token take() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }
    Token expect(Tok k, const char* what) {
        if (!at(k))
            throw ParseError(peek().loc, std::string("expected ") + what + ", found '" +
                                             (peek().kind == Tok::Eof ? "end of input" : peek().text) +
                                             "'");
        return take();
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(peek().loc, msg); }

    TermPtr stamp(TermPtr t) {
        const_cast<TermExpr*>(t.get())->id = next_term_id++;
        return t;
    }

    // --- programs ---------------------------------------------------------

    SourceProgram program() {
        SourceProgram prog;
        std::set<std::string> names;
        while (!at(Tok::Eof)) {
            if (at(Tok::KwData)) {
                prog.data_decls.push_back(data_decl());
                continue;
            }
            if (at(Tok::KwImport)) {
                take();
                expect(Tok::UpperIdent, "module name after 'import'");
                continue;
            }
            TopLevelDef def = top_def();
            if (!names.insert(def.name).second)
                throw ParseError(def.loc, "duplicate definition of '" + def.name + "'");
            prog.defs.push_back(std::move(def));
        }
        return prog;
    }

    DataDecl data_decl() {
        DataDecl d;
        d.loc = take().loc;  // 'data'
        d.name = expect(Tok::UpperIdent, "data type name").text;
        if (d.name == "Vec" || d.name == "N")
            throw ParseError(peek().loc, "'" + d.name + "' is a built-in type");
        while (at(Tok::LowerIdent)) d.params.push_back(take().text);
        expect(Tok::Equals, "'=' in data declaration");
        KindEnv kenv;
        for (const auto& p : d.params) kenv.vars[p] = Binder{p, Kind::Type, ""};
        // register before parsing constructor fields so recursion fails with a
        // clear message instead of "unknown constructor"
        data_arity[d.name] = d.params.size();
        while (true) {
            DataCtor ctor;
            ctor.name = expect(Tok::UpperIdent, "constructor name").text;
            while (starts_type_atom()) ctor.args.push_back(type_atom(kenv));
            d.ctors.push_back(std::move(ctor));
            if (at(Tok::Bar)) {
                take();
                continue;
            }
            break;
        }
        return d;
    }

    TopLevelDef top_def() {
        TopLevelDef def;
        Token name = expect(Tok::LowerIdent, "definition name");
        def.name = name.text;
        def.loc = name.loc;
        if (is_primitive_name(def.name))
            throw ParseError(name.loc, "'" + def.name + "' is a reserved primitive name");
        expect(Tok::Colon, "':' after definition name");
        def.scheme = scheme();
        // clauses: repeated equations introduced by the definition's name
        while (at(Tok::LowerIdent) && peek().text == def.name && peek(1).kind != Tok::Colon) {
            take();
            Clause cl;
            cl.loc = peek().loc;
            while (!at(Tok::Equals)) cl.params.push_back(apattern());
            expect(Tok::Equals, "'='");
            cl.body = expr();
            def.clauses.push_back(std::move(cl));
            if (at(Tok::Semi)) take();
        }
        if (def.clauses.empty())
            throw ParseError(name.loc, "definition '" + def.name + "' has no equations");
        size_t arity = def.clauses.front().params.size();
        for (const auto& cl : def.clauses)
            if (cl.params.size() != arity)
                throw ParseError(cl.body->loc,
                                 "clauses of '" + def.name + "' differ in number of patterns");
        return def;
    }

    // --- schemes and types --------------------------------------------------

    TypeScheme scheme() {
        TypeScheme sc;
        KindEnv kenv;
        if (at(Tok::KwForall)) {
            take();
            expect(Tok::LBrace, "'{' after forall");
            while (true) {
                std::vector<Token> group;
                group.push_back(expect(Tok::LowerIdent, "type variable"));
                while (at(Tok::LowerIdent)) group.push_back(take());
                expect(Tok::Colon, "':' in binder");
                Binder proto{"", Kind::Type, ""};
                if (at(Tok::UpperIdent)) {
                    std::string k = take().text;
                    if (k == "Type")
                        proto.kind = Kind::Type;
                    else if (k == "Protocol")
                        proto.kind = Kind::Protocol;
                    else if (k == "Nat")
                        proto.kind = Kind::Nat;
                    else if (k == "Semiring")
                        proto.kind = Kind::Semiring;
                    else
                        fail("unknown kind '" + k + "'");
                } else if (at(Tok::LowerIdent)) {
                    Token s = take();
                    const Binder* sb = kenv.find(s.text);
                    if (!sb || sb->kind != Kind::Semiring)
                        throw ParseError(s.loc, "'" + s.text + "' is not a semiring variable");
                    proto.kind = Kind::GradeOf;
                    proto.semiring = s.text;
                } else {
                    fail("expected a kind");
                }
                for (const auto& g : group) {
                    Binder b = proto;
                    b.name = g.text;
                    if (kenv.find(b.name))
                        throw ParseError(g.loc, "duplicate binder '" + b.name + "'");
                    kenv.vars[b.name] = b;
                    sc.binders.push_back(b);
                }
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
            expect(Tok::RBrace, "'}'");
            expect(Tok::Dot, "'.' after forall binders");
        }
        if (at(Tok::LBrace)) {
            take();
            while (true) {
                Constraint c;
                Token p = expect(Tok::UpperIdent, "constraint name");
                c.pred = p.text;
                c.loc = p.loc;
                if (c.pred != "SingleAction" && c.pred != "ReceivePrefix" && c.pred != "Sends")
                    throw ParseError(p.loc, "unknown constraint '" + c.pred + "'");
                c.protocol = proto_atom(kenv);
                sc.constraints.push_back(std::move(c));
                if (at(Tok::Comma)) {
                    take();
                    continue;
                }
                break;
            }
            expect(Tok::RBrace, "'}'");
            expect(Tok::FatArrow, "'=>' after constraints");
        }
        sc.body = type(kenv);
        cur = kenv;
        return sc;
    }

    bool starts_type_atom() const {
        return at(Tok::UpperIdent) || at(Tok::LowerIdent) || at(Tok::LParen);
    }

    TypePtr type(const KindEnv& kenv) {
        TypePtr lhs = type_operand(kenv);
        if (at(Tok::Arrow)) {
            SourceLoc loc = take().loc;
            TypePtr rhs = type(kenv);
            return type_fun(lhs, rhs, loc);
        }
        return lhs;
    }

    // An application (built-in or data head with its fixed number of
    // arguments) or a single atom. Postfix box grades bind to atoms.
    TypePtr type_operand(const KindEnv& kenv) {
        if (at(Tok::UpperIdent)) {
            const std::string& head = peek().text;
            SourceLoc loc = peek().loc;
            if (head == "Vec") {
                take();
                NatPtr len = nat_atom(kenv);
                TypePtr el = type_atom(kenv);
                return boxes(kenv, type_vec(len, el, loc));
            }
            if (head == "N") {
                take();
                return boxes(kenv, type_nat(nat_atom(kenv), loc));
            }
            if (head == "LChan" || head == "Chan") {
                take();
                return boxes(kenv, type_chan(proto_atom(kenv), loc));
            }
            if (is_protocol_head(head))
                fail("protocol '" + head + "' used in type position (wrap it in LChan)");
            auto it = data_arity.find(head);
            if (it != data_arity.end() && it->second > 0) {
                take();
                std::vector<TypePtr> args;
                for (size_t i = 0; i < it->second; ++i) args.push_back(type_atom(kenv));
                return boxes(kenv, type_data(head, std::move(args), loc));
            }
        }
        return type_atom(kenv);
    }

    static bool is_protocol_head(const std::string& s) {
        return s == "Send" || s == "Recv" || s == "Select" || s == "Offer" || s == "End" ||
               s == "Dual" || s == "Graded";
    }

    TypePtr type_atom(const KindEnv& kenv) {
        SourceLoc loc = peek().loc;
        TypePtr t;
        if (at(Tok::UpperIdent)) {
            std::string head = take().text;
            if (head == "Int")
                t = type_base(BaseType::Int, loc);
            else if (head == "Bool")
                t = type_base(BaseType::Bool, loc);
            else if (data_arity.count(head)) {
                if (data_arity[head] != 0)
                    fail("type constructor '" + head + "' needs arguments (parenthesise it)");
                t = type_data(head, {}, loc);
            } else if (head == "Vec" || head == "N" || head == "LChan" || head == "Chan")
                fail("type constructor '" + head + "' needs arguments (parenthesise it)");
            else if (is_protocol_head(head))
                fail("protocol '" + head + "' used in type position (wrap it in LChan)");
            else
                fail("unknown type constructor '" + head + "'");
        } else if (at(Tok::LowerIdent)) {
            Token v = take();
            const Binder* b = kenv.find(v.text);
            if (!b) throw ParseError(v.loc, "unbound type variable '" + v.text + "'");
            if (b->kind != Kind::Type)
                throw ParseError(v.loc, "variable '" + v.text + "' does not have kind Type here");
            t = type_var(v.text, loc);
        } else if (at(Tok::LParen)) {
            take();
            if (at(Tok::RParen)) {
                take();
                t = type_base(BaseType::Unit, loc);
            } else {
                TypePtr inner = type(kenv);
                if (at(Tok::Comma)) {
                    take();
                    TypePtr second = type(kenv);
                    expect(Tok::RParen, "')'");
                    t = type_pair(inner, second, loc);
                } else {
                    expect(Tok::RParen, "')'");
                    t = inner;
                }
            }
        } else {
            fail("expected a type");
        }
        return boxes(kenv, t);
    }

    TypePtr boxes(const KindEnv& kenv, TypePtr t) {
        while (at(Tok::LBracket)) {
            SourceLoc loc = take().loc;
            GradePtr g = grade(kenv);
            expect(Tok::RBracket, "']' after grade");
            t = type_box(t, g, loc);
        }
        return t;
    }

    ProtoPtr protocol(const KindEnv& kenv) {
        SourceLoc loc = peek().loc;
        if (at(Tok::UpperIdent)) {
            const std::string& head = peek().text;
            if (head == "Send" || head == "Recv") {
                take();
                TypePtr payload = type_atom(kenv);
                ProtoPtr cont = proto_atom(kenv);
                return head == "Send" ? proto_send(payload, cont, loc)
                                      : proto_recv(payload, cont, loc);
            }
            if (head == "Select" || head == "Offer") {
                take();
                ProtoPtr l = proto_atom(kenv);
                ProtoPtr r = proto_atom(kenv);
                return head == "Select" ? proto_select(l, r, loc) : proto_offer(l, r, loc);
            }
            if (head == "Dual") {
                take();
                return proto_dual(proto_atom(kenv), loc);
            }
            if (head == "Graded") {
                take();
                NatPtr n = nat_atom(kenv);
                return proto_graded(n, proto_atom(kenv), loc);
            }
        }
        return proto_atom(kenv);
    }

    ProtoPtr proto_atom(const KindEnv& kenv) {
        SourceLoc loc = peek().loc;
        if (at(Tok::UpperIdent) && peek().text == "End") {
            take();
            return proto_end(loc);
        }
        if (at(Tok::LowerIdent)) {
            Token v = take();
            const Binder* b = kenv.find(v.text);
            if (!b) throw ParseError(v.loc, "unbound type variable '" + v.text + "'");
            if (b->kind != Kind::Protocol)
                throw ParseError(v.loc, "variable '" + v.text + "' does not have kind Protocol");
            return proto_var(v.text, loc);
        }
        if (at(Tok::LParen)) {
            take();
            ProtoPtr p = protocol(kenv);
            expect(Tok::RParen, "')'");
            return p;
        }
        if (at(Tok::UpperIdent)) fail("protocol '" + peek().text + "' needs parentheses here");
        fail("expected a protocol");
    }

    NatPtr nat_atom(const KindEnv& kenv) {
        SourceLoc loc = peek().loc;
        if (at(Tok::IntLit)) return nat_lit(take().value, loc);
        if (at(Tok::LowerIdent)) {
            Token v = take();
            const Binder* b = kenv.find(v.text);
            if (!b) throw ParseError(v.loc, "unbound type variable '" + v.text + "'");
            if (b->kind != Kind::Nat)
                throw ParseError(v.loc, "variable '" + v.text + "' does not have kind Nat");
            return nat_var(v.text, loc);
        }
        if (at(Tok::LParen)) {
            take();
            NatPtr n = nat_sum(kenv);
            expect(Tok::RParen, "')'");
            return n;
        }
        fail("expected a type-level natural");
    }

    NatPtr nat_sum(const KindEnv& kenv) {
        NatPtr lhs = nat_atom(kenv);
        while (at(Tok::Plus)) {
            SourceLoc loc = take().loc;
            lhs = nat_sum_node(lhs, nat_atom(kenv), loc);
        }
        return lhs;
    }
    static NatPtr nat_sum_node(NatPtr l, NatPtr r, SourceLoc loc) {
        return gsess::nat_sum(std::move(l), std::move(r), loc);
    }

    GradePtr grade(const KindEnv& kenv) {
        SourceLoc loc = peek().loc;
        if (at(Tok::LowerIdent)) {
            const Binder* b = kenv.find(peek().text);
            if (b && b->kind == Kind::GradeOf) return grade_var(take().text, loc);
        }
        NatPtr lo = nat_sum(kenv);
        if (at(Tok::DotDot)) {
            take();
            if (at(Tok::UpperIdent) && peek().text == "Inf") {
                take();
                return grade_interval(lo, std::nullopt, loc);
            }
            NatPtr hi = nat_sum(kenv);
            return grade_interval(lo, hi, loc);
        }
        return grade_nat(lo, loc);
    }

    // --- patterns -----------------------------------------------------------

    PatPtr pattern() {
        if (at(Tok::UpperIdent)) {
            Token c = take();
            if (c.text == "Inf") throw ParseError(c.loc, "'Inf' is not a constructor");
            std::vector<PatPtr> args;
            while (starts_apattern()) args.push_back(apattern());
            return pat_con(c.text, std::move(args), c.loc);
        }
        return apattern();
    }

    bool starts_apattern() const {
        return at(Tok::LowerIdent) || at(Tok::Underscore) || at(Tok::IntLit) || at(Tok::LParen) ||
               at(Tok::LBracket) || at(Tok::UpperIdent);
    }

    PatPtr apattern() {
        SourceLoc loc = peek().loc;
        if (at(Tok::LowerIdent)) {
            Token v = take();
            if (is_primitive_name(v.text))
                throw ParseError(v.loc, "cannot bind reserved primitive name '" + v.text + "'");
            return pat_var(v.text, loc);
        }
        if (at(Tok::Underscore)) {
            take();
            return pat_wild(loc);
        }
        if (at(Tok::IntLit)) return pat_int(take().value, loc);
        if (at(Tok::UpperIdent)) {
            // bare constructor: zero arguments
            return pat_con(take().text, {}, loc);
        }
        if (at(Tok::LBracket)) {
            take();
            PatPtr inner = pattern();
            expect(Tok::RBracket, "']' after box pattern");
            return pat_box(inner, loc);
        }
        if (at(Tok::LParen)) {
            take();
            if (at(Tok::RParen)) {
                take();
                return pat_unit(loc);
            }
            PatPtr first = pattern();
            if (at(Tok::Comma)) {
                take();
                PatPtr second = pattern();
                expect(Tok::RParen, "')'");
                return pat_pair(first, second, loc);
            }
            expect(Tok::RParen, "')'");
            return first;
        }
        fail("expected a pattern");
    }

    // --- terms ----------------------------------------------------------------

    TermPtr expr() {
        if (at(Tok::Backslash)) {
            SourceLoc loc = take().loc;
            std::vector<PatPtr> params;
            params.push_back(apattern());
            while (!at(Tok::Arrow)) params.push_back(apattern());
            expect(Tok::Arrow, "'->' in lambda");
            TermPtr body = expr();
            for (auto it = params.rbegin(); it != params.rend(); ++it)
                body = stamp(term_lam(*it, body, loc));
            return body;
        }
        if (at(Tok::KwLet)) {
            SourceLoc loc = take().loc;
            struct Bind {
                PatPtr pat;
                std::optional<TypePtr> annot;
                TermPtr rhs;
                SourceLoc loc;
            };
            std::vector<Bind> binds;
            while (true) {
                Bind b;
                b.loc = peek().loc;
                b.pat = pattern();
                if (at(Tok::Colon)) {
                    take();
                    b.annot = type(cur);
                }
                expect(Tok::Equals, "'=' in let binding");
                b.rhs = expr();
                binds.push_back(std::move(b));
                if (at(Tok::Semi)) {
                    take();
                    if (at(Tok::KwIn)) break;  // tolerate a trailing separator
                    continue;
                }
                break;
            }
            expect(Tok::KwIn, "'in' after let bindings");
            TermPtr body = expr();
            for (auto it = binds.rbegin(); it != binds.rend(); ++it)
                body = stamp(term_let(it->pat, it->annot, it->rhs, body, it->loc));
            (void)loc;
            return body;
        }
        return eq_expr();
    }

    TermPtr eq_expr() {
        TermPtr lhs = add_expr();
        if (at(Tok::EqEq)) {
            SourceLoc loc = take().loc;
            TermPtr rhs = add_expr();
            return stamp(term_binop(BinOp::Eq, lhs, rhs, loc));
        }
        return lhs;
    }

    TermPtr add_expr() {
        TermPtr lhs = app_expr();
        while (at(Tok::Plus)) {
            SourceLoc loc = take().loc;
            TermPtr rhs = app_expr();
            lhs = stamp(term_binop(BinOp::Add, lhs, rhs, loc));
        }
        return lhs;
    }

    bool starts_atom() const {
        return at(Tok::IntLit) || at(Tok::LowerIdent) || at(Tok::UpperIdent) || at(Tok::LParen) ||
               at(Tok::LBracket);
    }

    TermPtr app_expr() {
        TermPtr head = atom();
        while (starts_atom()) {
            TermPtr arg = atom();
            head = stamp(term_app(head, arg, head->loc));
        }
        return head;
    }

    TermPtr atom() {
        SourceLoc loc = peek().loc;
        if (at(Tok::IntLit)) return stamp(term_int(take().value, loc));
        if (at(Tok::LowerIdent)) {
            std::string name = take().text;
            if (is_primitive_name(name)) return stamp(term_primref(name, loc));
            return stamp(term_var(name, loc));
        }
        if (at(Tok::UpperIdent)) {
            std::string name = take().text;
            if (name == "True") return stamp(term_bool(true, loc));
            if (name == "False") return stamp(term_bool(false, loc));
            return stamp(term_conref(name, loc));
        }
        if (at(Tok::LBracket)) {
            take();
            TermPtr inner = expr();
            expect(Tok::RBracket, "']' after promotion");
            return stamp(term_box(inner, loc));
        }
        if (at(Tok::LParen)) {
            take();
            if (at(Tok::RParen)) {
                take();
                return stamp(term_unit(loc));
            }
            TermPtr first = expr();
            if (at(Tok::Comma)) {
                take();
                TermPtr second = expr();
                expect(Tok::RParen, "')'");
                return stamp(term_pair(first, second, loc));
            }
            expect(Tok::RParen, "')'");
            return first;
        }
        fail("expected an expression");
    }
};

}  // namespace

SourceProgram parse_program(const std::string& text) {
    Parser p(text);
    return p.program();
}

TypeScheme parse_scheme_string(const std::string& text,
                               const std::map<std::string, size_t>& data_arities) {
    Parser p(text);
    p.data_arity = data_arities;
    TypeScheme sc = p.scheme();
    if (!p.at(Tok::Eof)) p.fail("unexpected input after type scheme");
    return sc;
}

}  // namespace gsess
