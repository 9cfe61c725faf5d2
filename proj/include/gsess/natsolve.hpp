#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "gsess/ast.hpp"

namespace gsess {

// Linear polynomial over type-level nat variables with non-negative integer
// coefficients: the canonical form of an index expression.
struct NatPoly {
    long constant = 0;
    std::map<std::string, long> coeffs;  // entries always > 0

    static NatPoly lit(long k);
    static NatPoly var(const std::string& name);

    NatPoly plus(const NatPoly& other) const;
    // Defined when at least one side is constant (indices stay linear).
    std::optional<NatPoly> times(const NatPoly& other) const;
    // this - other, when every resulting coefficient stays non-negative.
    std::optional<NatPoly> minus(const NatPoly& other) const;

    bool is_constant() const { return coeffs.empty(); }
    bool is_zero() const { return constant == 0 && coeffs.empty(); }
    bool mentions(const std::string& name) const { return coeffs.count(name) > 0; }

    NatPoly substitute(const std::string& name, const NatPoly& value) const;

    bool operator==(const NatPoly& other) const = default;
    std::string str() const;
};

NatPoly poly_of(const NatPtr& e);

// One step of equation solving over (N, +, literals). Both sides are
// normalised and common parts cancelled first.
struct NatEqOutcome {
    enum Kind { Tautology, Solved, Unsat, Stuck } kind;
    std::string var;   // Solved
    NatPoly value;     // Solved
};

// `solvable` decides which variables may be isolated (metas always; clause
// rigids only during pattern refinement).
NatEqOutcome solve_nat_eq(const NatPoly& lhs, const NatPoly& rhs,
                          const std::function<bool(const std::string&)>& solvable);

}  // namespace gsess
