#include "gsess/natsolve.hpp"

#include <functional>
#include <sstream>

namespace gsess {

NatPoly NatPoly::lit(long k) {
    NatPoly p;
    p.constant = k;
    return p;
}

NatPoly NatPoly::var(const std::string& name) {
    NatPoly p;
    p.coeffs[name] = 1;
    return p;
}

NatPoly NatPoly::plus(const NatPoly& other) const {
    NatPoly out = *this;
    out.constant += other.constant;
    for (const auto& [v, c] : other.coeffs) {
        out.coeffs[v] += c;
        if (out.coeffs[v] == 0) out.coeffs.erase(v);
    }
    return out;
}

std::optional<NatPoly> NatPoly::times(const NatPoly& other) const {
    const NatPoly* scalar = nullptr;
    const NatPoly* poly = nullptr;
    if (is_constant()) {
        scalar = this;
        poly = &other;
    } else if (other.is_constant()) {
        scalar = &other;
        poly = this;
    } else {
        return std::nullopt;
    }
    NatPoly out;
    out.constant = scalar->constant * poly->constant;
    if (scalar->constant != 0)
        for (const auto& [v, c] : poly->coeffs) out.coeffs[v] = c * scalar->constant;
    return out;
}

std::optional<NatPoly> NatPoly::minus(const NatPoly& other) const {
    NatPoly out = *this;
    out.constant -= other.constant;
    if (out.constant < 0) return std::nullopt;
    for (const auto& [v, c] : other.coeffs) {
        long have = out.coeffs.count(v) ? out.coeffs[v] : 0;
        if (have < c) return std::nullopt;
        if (have == c)
            out.coeffs.erase(v);
        else
            out.coeffs[v] = have - c;
    }
    return out;
}

NatPoly NatPoly::substitute(const std::string& name, const NatPoly& value) const {
    auto it = coeffs.find(name);
    if (it == coeffs.end()) return *this;
    long c = it->second;
    NatPoly out = *this;
    out.coeffs.erase(name);
    NatPoly scaled = *value.times(NatPoly::lit(c));
    return out.plus(scaled);
}

std::string NatPoly::str() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [v, c] : coeffs) {
        if (!first) out << " + ";
        first = false;
        if (c != 1) out << c << "*";
        out << v;
    }
    if (constant != 0 || first) {
        if (!first) out << " + ";
        out << constant;
    }
    return out.str();
}

NatPoly poly_of(const NatPtr& e) {
    return std::visit(overloaded{[](const NatVar& v) { return NatPoly::var(v.name); },
                                 [](const NatLit& l) { return NatPoly::lit(l.value); },
                                 [](const NatSum& s) {
                                     return poly_of(s.lhs).plus(poly_of(s.rhs));
                                 }},
                      e->node);
}

NatEqOutcome solve_nat_eq(const NatPoly& lhs, const NatPoly& rhs,
                          const std::function<bool(const std::string&)>& solvable) {
    // cancel common parts
    NatPoly a = lhs, b = rhs;
    long c = std::min(a.constant, b.constant);
    a.constant -= c;
    b.constant -= c;
    for (auto it = a.coeffs.begin(); it != a.coeffs.end();) {
        auto jt = b.coeffs.find(it->first);
        if (jt == b.coeffs.end()) {
            ++it;
            continue;
        }
        long k = std::min(it->second, jt->second);
        it->second -= k;
        jt->second -= k;
        if (jt->second == 0) b.coeffs.erase(jt);
        if (it->second == 0)
            it = a.coeffs.erase(it);
        else
            ++it;
    }

    if (a.is_zero() && b.is_zero()) return {NatEqOutcome::Tautology, "", {}};
    if (a.is_zero() || b.is_zero()) {
        const NatPoly& residue = a.is_zero() ? b : a;
        // residue = 0: every part must be zero
        if (residue.constant > 0 && residue.coeffs.empty())
            return {NatEqOutcome::Unsat, "", {}};
        if (residue.constant == 0) {
            // all variables must be zero; solve them one at a time
            for (const auto& [v, k] : residue.coeffs)
                if (solvable(v)) return {NatEqOutcome::Solved, v, NatPoly::lit(0)};
            return {NatEqOutcome::Stuck, "", {}};
        }
        return {NatEqOutcome::Unsat, "", {}};
    }

    // try to isolate a coefficient-1 solvable variable from either side
    auto isolate = [&](const NatPoly& side, const NatPoly& other) -> std::optional<NatEqOutcome> {
        for (const auto& [v, k] : side.coeffs) {
            if (k != 1 || !solvable(v) || other.mentions(v)) continue;
            NatPoly rest = side;
            rest.coeffs.erase(v);
            if (auto val = other.minus(rest)) return NatEqOutcome{NatEqOutcome::Solved, v, *val};
        }
        return std::nullopt;
    };
    if (auto r = isolate(a, b)) return *r;
    if (auto r = isolate(b, a)) return *r;

    // ground disequality
    if (a.is_constant() && b.is_constant())
        return a.constant == b.constant ? NatEqOutcome{NatEqOutcome::Tautology, "", {}}
                                        : NatEqOutcome{NatEqOutcome::Unsat, "", {}};
    return {NatEqOutcome::Stuck, "", {}};
}

}  // namespace gsess
