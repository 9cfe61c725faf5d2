#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gsess/ast.hpp"
#include "gsess/grades.hpp"

namespace gsess {

// Stable rule tokens for machine-readable errors.
enum class TypeRule {
    Scope,        // unbound variable / unknown constructor
    Linearity,    // unused or discarded linear variable
    Contraction,  // linear variable used more than once
    Grade,        // usage does not satisfy the declared grade
    Semiring,     // mixed grade semirings
    Constraint,   // protocol predicate violated
    Promotion,    // the call-by-value promotion guard
    NatIndex,     // unsolvable index constraint
    Duality,      // protocol mismatch
    Type,         // all other type mismatches
    Ambiguous,    // undetermined grade or protocol at an instantiation site
    Arity,        // malformed application / clause shape
};

const char* rule_name(TypeRule rule);

struct TypeError {
    SourceLoc loc;
    TypeRule rule;
    std::string message;

    // "line:col: rule: message" (the CLI prefixes the file name)
    std::string str() const;
};

// Per-call-site facts the evaluator wants: promotions inserted implicitly by
// the checker, and resolved grade bounds for shared-channel forks.
struct Elaboration {
    std::set<int> implicit_box;             // term ids to evaluate under a box
    std::map<int, ExtNat> fork_grade_upper;  // forkNonLinear term id -> upper bound
};

struct CheckResult {
    std::vector<TypeError> errors;  // at most one per failing definition
    Elaboration elab;
    bool ok() const { return errors.empty(); }
};

struct CheckOptions {
    bool promotion_guard = true;  // disabled by --unsafe-promotion / CBN mode
};

CheckResult check_program(const SourceProgram& program, const CheckOptions& opts = {});

// The syntactic call-by-value guard: false when the term contains a
// channel-creating primitive occurrence.
bool promotion_guard(const TermPtr& t);

}  // namespace gsess
