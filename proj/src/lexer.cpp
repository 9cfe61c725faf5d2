#include "gsess/lexer.hpp"

#include <cctype>

namespace gsess {

namespace {

bool ident_start(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
bool ident_char(char c) { return std::isalnum((unsigned char)c) || c == '_' || c == '\''; }

}  // namespace

std::vector<Token> lex(const std::string& source) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1, col = 1;

    auto loc = [&]() { return SourceLoc{line, col}; };
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (i < source.size() && source[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    auto push = [&](Tok kind, SourceLoc at, std::string text, long value = 0) {
        out.push_back(Token{kind, std::move(text), value, at});
    };

    while (i < source.size()) {
        char c = source[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '-' && i + 1 < source.size() && source[i + 1] == '-') {
            while (i < source.size() && source[i] != '\n') advance(1);
            continue;
        }
        SourceLoc at = loc();
        if (std::isdigit((unsigned char)c)) {
            size_t j = i;
            while (j < source.size() && std::isdigit((unsigned char)source[j])) ++j;
            std::string text = source.substr(i, j - i);
            advance(j - i);
            push(Tok::IntLit, at, text, std::stol(text));
            continue;
        }
        if (ident_start(c)) {
            size_t j = i;
            while (j < source.size() && ident_char(source[j])) ++j;
            std::string text = source.substr(i, j - i);
            advance(j - i);
            if (text == "_")
                push(Tok::Underscore, at, text);
            else if (text == "let")
                push(Tok::KwLet, at, text);
            else if (text == "in")
                push(Tok::KwIn, at, text);
            else if (text == "forall")
                push(Tok::KwForall, at, text);
            else if (text == "data")
                push(Tok::KwData, at, text);
            else if (text == "import")
                push(Tok::KwImport, at, text);
            else if (std::isupper((unsigned char)text[0]))
                push(Tok::UpperIdent, at, text);
            else
                push(Tok::LowerIdent, at, text);
            continue;
        }
        auto two = [&](char a, char b) {
            return c == a && i + 1 < source.size() && source[i + 1] == b;
        };
        if (two('-', '>')) {
            advance(2);
            push(Tok::Arrow, at, "->");
            continue;
        }
        if (two('=', '>')) {
            advance(2);
            push(Tok::FatArrow, at, "=>");
            continue;
        }
        if (two('=', '=')) {
            advance(2);
            push(Tok::EqEq, at, "==");
            continue;
        }
        if (two('.', '.')) {
            advance(2);
            push(Tok::DotDot, at, "..");
            continue;
        }
        switch (c) {
            case '(': advance(1); push(Tok::LParen, at, "("); continue;
            case ')': advance(1); push(Tok::RParen, at, ")"); continue;
            case '[': advance(1); push(Tok::LBracket, at, "["); continue;
            case ']': advance(1); push(Tok::RBracket, at, "]"); continue;
            case '{': advance(1); push(Tok::LBrace, at, "{"); continue;
            case '}': advance(1); push(Tok::RBrace, at, "}"); continue;
            case ',': advance(1); push(Tok::Comma, at, ","); continue;
            case ';': advance(1); push(Tok::Semi, at, ";"); continue;
            case ':': advance(1); push(Tok::Colon, at, ":"); continue;
            case '=': advance(1); push(Tok::Equals, at, "="); continue;
            case '.': advance(1); push(Tok::Dot, at, "."); continue;
            case '\\': advance(1); push(Tok::Backslash, at, "\\"); continue;
            case '|': advance(1); push(Tok::Bar, at, "|"); continue;
            case '+': advance(1); push(Tok::Plus, at, "+"); continue;
            default:
                throw ParseError(at, std::string("unsupported character '") + c + "'");
        }
    }
    out.push_back(Token{Tok::Eof, "", 0, loc()});
    return out;
}

const char* token_name(Tok kind) {
    switch (kind) {
        case Tok::LowerIdent: return "identifier";
        case Tok::UpperIdent: return "constructor";
        case Tok::IntLit: return "integer";
        case Tok::KwLet: return "'let'";
        case Tok::KwIn: return "'in'";
        case Tok::KwForall: return "'forall'";
        case Tok::KwData: return "'data'";
        case Tok::KwImport: return "'import'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::Comma: return "','";
        case Tok::Semi: return "';'";
        case Tok::Colon: return "':'";
        case Tok::Equals: return "'='";
        case Tok::EqEq: return "'=='";
        case Tok::Arrow: return "'->'";
        case Tok::FatArrow: return "'=>'";
        case Tok::Dot: return "'.'";
        case Tok::DotDot: return "'..'";
        case Tok::Backslash: return "'\\'";
        case Tok::Bar: return "'|'";
        case Tok::Plus: return "'+'";
        case Tok::Underscore: return "'_'";
        case Tok::Eof: return "end of input";
    }
    return "?";
}

}  // namespace gsess
