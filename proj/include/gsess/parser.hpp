#pragma once

#include <map>

#include "gsess/ast.hpp"
#include "gsess/lexer.hpp"

namespace gsess {

// Parse a whole source file. Throws ParseError with line/column on malformed
// input. Enforces the syntactic invariants: unique definition names, at least
// one clause per definition, equal arity across a definition's clauses, and
// every type variable bound by a binder.
SourceProgram parse_program(const std::string& text);

// Parse a standalone type scheme (used for the built-in signatures and in
// tests). `data_arities` supplies user data constructors in scope.
TypeScheme parse_scheme_string(const std::string& text,
                               const std::map<std::string, size_t>& data_arities = {});

}  // namespace gsess
