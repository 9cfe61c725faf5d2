#pragma once

#include <string>

#include "gsess/ast.hpp"

namespace gsess {

// Printers whose output reparses to an equal AST.
std::string pretty(const NatPtr& n);
std::string pretty(const GradePtr& g);
std::string pretty(const ProtoPtr& p);
std::string pretty(const TypePtr& t);
std::string pretty(const TypeScheme& s);
std::string pretty(const PatPtr& p);
std::string pretty(const TermPtr& t);
std::string pretty_print(const SourceProgram& p);

}  // namespace gsess
