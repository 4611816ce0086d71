#pragma once

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivreach/expr.hpp"

namespace ivreach {

// Textual expression form for vector fields and plain vector functions.
//
//   program  := '[' expr (',' expr)* ']' | expr
//   expr     := term (('+'|'-') term)*
//   term     := unary (('*'|'/') unary)*
//   unary    := ('-'|'+') unary | power
//   power    := atom ('^' ('-')? integer)?
//   atom     := number | 'pi' | variable | name '(' expr ')' | '(' expr ')'
//   variable := 'x'K | 'u'K | 'w'K | 't'        (K is a 1-based index)
//
// Functions: sin cos tan atan sqrt exp tanh abs neg. Slot dimensions are
// inferred from the highest index used unless overridden.
namespace exprtext {

struct SlotDims {
    // -1 means "infer from the expression text"
    long x = -1, u = -1, w = -1;
    bool with_t = false;  // force a t slot even if unused
};

namespace detail {

struct Token {
    enum Kind { number, ident, sym, end } kind = end;
    double num = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(std::string_view s) : s_(s) { advance(); }
    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ >= s_.size()) {
            tok_ = Token{};
            return;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < s_.size() &&
             std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
            const char* begin = s_.data() + pos_;
            char* endp = nullptr;
            tok_.kind = Token::number;
            tok_.num = std::strtod(begin, &endp);
            pos_ += static_cast<std::size_t>(endp - begin);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = pos_;
            while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
                ++j;
            tok_.kind = Token::ident;
            tok_.text = std::string(s_.substr(pos_, j - pos_));
            pos_ = j;
            return;
        }
        tok_.kind = Token::sym;
        tok_.text = std::string(1, c);
        ++pos_;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    Token tok_;
};

// A variable reference "x3" -> (slot 'x', index 2).
inline std::optional<std::pair<char, std::size_t>> as_variable(const std::string& id) {
    if (id == "t") return std::make_pair('t', std::size_t{0});
    if (id.size() < 2) return std::nullopt;
    const char s = id[0];
    if (s != 'x' && s != 'u' && s != 'w') return std::nullopt;
    std::size_t k = 0;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(id[i]))) return std::nullopt;
        k = k * 10 + static_cast<std::size_t>(id[i] - '0');
    }
    if (k == 0) return std::nullopt;
    return std::make_pair(s, k - 1);
}

class Parser {
public:
    Parser(std::string_view text, const SlotDims& dims) : lex_(text) {
        // first pass over a fresh lexer: size the slots
        std::map<char, std::size_t> used;
        Lexer scan(text);
        while (scan.peek().kind != Token::end) {
            Token t = scan.take();
            if (t.kind == Token::ident) {
                if (auto v = as_variable(t.text))
                    used[v->first] = std::max(used[v->first], v->second + 1);
            }
        }
        auto dim_of = [&](char c, long forced) -> std::size_t {
            if (forced >= 0) {
                if (used.count(c) && used[c] > static_cast<std::size_t>(forced))
                    throw ConfigError(std::string(1, c) + std::to_string(used[c]) +
                                      " exceeds declared dimension");
                return static_cast<std::size_t>(forced);
            }
            return used.count(c) ? used[c] : 0;
        };
        const std::size_t nx = dim_of('x', dims.x);
        const std::size_t nu = dim_of('u', dims.u);
        const std::size_t nw = dim_of('w', dims.w);
        const bool has_t = dims.with_t || used.count('t');
        if (nx == 0) throw ConfigError("expression uses no state variable x<k>");
        slot_ref_['x'] = b_.input("x", nx);
        if (nu > 0) slot_ref_['u'] = b_.input("u", nu);
        if (nw > 0) slot_ref_['w'] = b_.input("w", nw);
        if (has_t) slot_ref_['t'] = b_.input("t", 1);
    }

    ExprGraph parse_program() {
        if (lex_.peek().kind == Token::sym && lex_.peek().text == "[") {
            lex_.take();
            std::vector<int> parts;
            parts.push_back(parse_expr());
            while (lex_.peek().kind == Token::sym && lex_.peek().text == ",") {
                lex_.take();
                parts.push_back(parse_expr());
            }
            expect_sym("]");
            b_.output(b_.concat(parts));
        } else {
            b_.output(parse_expr());
        }
        if (lex_.peek().kind != Token::end)
            throw ConfigError("trailing input after expression: '" + lex_.peek().text + "'");
        return b_.build();
    }

private:
    int parse_expr() {
        int lhs = parse_term();
        while (lex_.peek().kind == Token::sym &&
               (lex_.peek().text == "+" || lex_.peek().text == "-")) {
            const std::string op = lex_.take().text;
            const int rhs = parse_term();
            lhs = op == "+" ? b_.add(lhs, rhs) : b_.sub(lhs, rhs);
        }
        return lhs;
    }

    int parse_term() {
        int lhs = parse_unary();
        while (lex_.peek().kind == Token::sym &&
               (lex_.peek().text == "*" || lex_.peek().text == "/")) {
            const std::string op = lex_.take().text;
            const int rhs = parse_unary();
            lhs = op == "*" ? b_.mul(lhs, rhs) : b_.div(lhs, rhs);
        }
        return lhs;
    }

    int parse_unary() {
        if (lex_.peek().kind == Token::sym && lex_.peek().text == "-") {
            lex_.take();
            return b_.neg(parse_unary());
        }
        if (lex_.peek().kind == Token::sym && lex_.peek().text == "+") {
            lex_.take();
            return parse_unary();
        }
        return parse_power();
    }

    int parse_power() {
        const int base = parse_atom();
        if (lex_.peek().kind == Token::sym && lex_.peek().text == "^") {
            lex_.take();
            int sign = 1;
            if (lex_.peek().kind == Token::sym && lex_.peek().text == "-") {
                lex_.take();
                sign = -1;
            }
            if (lex_.peek().kind != Token::number)
                throw ConfigError("'^' expects an integer exponent");
            const Token t = lex_.take();
            const double e = t.num;
            if (e != static_cast<double>(static_cast<long>(e)))
                throw ConfigError("'^' expects an integer exponent, got " + std::to_string(e));
            return b_.pow_int(base, sign * static_cast<int>(e));
        }
        return base;
    }

    int parse_atom() {
        Token t = lex_.take();
        if (t.kind == Token::number) return b_.constant(t.num);
        if (t.kind == Token::ident) {
            if (t.text == "pi") return b_.constant(3.141592653589793238462643383279502884);
            if (auto v = as_variable(t.text)) {
                auto it = slot_ref_.find(v->first);
                if (it == slot_ref_.end())
                    throw ConfigError("variable " + t.text + " refers to an absent slot");
                return b_.index(it->second, v->second);
            }
            // function application
            expect_sym("(");
            const int arg = parse_expr();
            expect_sym(")");
            return b_.apply(t.text, {arg});
        }
        if (t.kind == Token::sym && t.text == "(") {
            const int e = parse_expr();
            expect_sym(")");
            return e;
        }
        throw ConfigError("unexpected token '" + t.text + "' in expression");
    }

    void expect_sym(const std::string& s) {
        if (lex_.peek().kind != Token::sym || lex_.peek().text != s)
            throw ConfigError("expected '" + s + "', got '" + lex_.peek().text + "'");
        lex_.take();
    }

    Lexer lex_;
    GraphBuilder b_;
    std::map<char, int> slot_ref_;
};

}  // namespace detail

inline ExprGraph parse(std::string_view text, const SlotDims& dims = {}) {
    detail::Parser p(text, dims);
    return p.parse_program();
}

}  // namespace exprtext

}  // namespace ivreach
