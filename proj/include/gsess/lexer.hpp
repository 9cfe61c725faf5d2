#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gsess/ast.hpp"

namespace gsess {

struct ParseError : std::runtime_error {
    ParseError(SourceLoc loc, const std::string& msg)
        : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + msg),
          loc(loc),
          message(msg) {}
    SourceLoc loc;
    std::string message;
};

enum class Tok {
    LowerIdent,
    UpperIdent,
    IntLit,
    KwLet,
    KwIn,
    KwForall,
    KwData,
    KwImport,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Equals,
    EqEq,
    Arrow,
    FatArrow,
    Dot,
    DotDot,
    Backslash,
    Bar,
    Plus,
    Underscore,
    Eof,
};

struct Token {
    Tok kind;
    std::string text;
    long value = 0;
    SourceLoc loc;
};

std::vector<Token> lex(const std::string& source);

const char* token_name(Tok kind);

}  // namespace gsess
