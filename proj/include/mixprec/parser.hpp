#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mixprec/expr.hpp"
#include "mixprec/interval.hpp"

namespace mixprec {

/// One function of the real-valued specification language: parameters with
/// their input ranges, a body, and an optional worst-case error target.
struct FunctionSpec {
    std::string name;
    std::vector<std::string> params;
    std::map<std::string, Interval> input_ranges;
    ExprPtr body;
    std::optional<Rational> target_error;
    std::string result_name = "res";
    SourceLoc loc;
};

namespace detail {

enum class TokKind { Ident, Number, Punct, End };

struct Token {
    TokKind kind;
    std::string text;
    int line;
    int col;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_ws();
            if (pos_ >= src_.size()) break;
            int line = line_, col = col_;
            char c = src_[pos_];
            if (isalpha_(c) || c == '_') {
                std::string id;
                while (pos_ < src_.size() && (isalnum_(src_[pos_]) || src_[pos_] == '_'))
                    id += advance();
                out.push_back({TokKind::Ident, id, line, col});
            } else if (isdigit_(c)) {
                out.push_back({TokKind::Number, lex_number(), line, col});
            } else {
                out.push_back({TokKind::Punct, lex_punct(line, col), line, col});
            }
        }
        out.push_back({TokKind::End, "", line_, col_});
        return out;
    }

private:
    static bool isalpha_(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
    static bool isdigit_(char c) { return c >= '0' && c <= '9'; }
    static bool isalnum_(char c) { return isalpha_(c) || isdigit_(c); }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') { ++line_; col_ = 1; } else { ++col_; }
        return c;
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    std::string lex_number() {
        std::string s;
        while (pos_ < src_.size() && isdigit_(src_[pos_])) s += advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            s += advance();
            while (pos_ < src_.size() && isdigit_(src_[pos_])) s += advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            size_t save = pos_;
            int sline = line_, scol = col_;
            std::string e;
            e += advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) e += advance();
            if (pos_ < src_.size() && isdigit_(src_[pos_])) {
                while (pos_ < src_.size() && isdigit_(src_[pos_])) e += advance();
                s += e;
            } else { // not an exponent after all
                pos_ = save;
                line_ = sline;
                col_ = scol;
            }
        }
        return s;
    }

    std::string lex_punct(int line, int col) {
        auto match = [&](std::string_view p) {
            if (src_.substr(pos_).starts_with(p)) {
                for (size_t i = 0; i < p.size(); ++i) advance();
                return true;
            }
            return false;
        };
        if (match("+/-")) return "+/-";
        if (match("&&")) return "&&";
        if (match("<=")) return "<=";
        if (match("=>")) return "=>";
        for (char c : std::string_view("(){}:=,+-*/")) {
            if (src_[pos_] == c) {
                advance();
                return std::string(1, c);
            }
        }
        throw ParseError(line, col, std::string("unexpected character '") + src_[pos_] + "'");
    }

    std::string_view src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

    std::vector<FunctionSpec> parse_file() {
        std::vector<FunctionSpec> out;
        std::set<std::string> names;
        while (peek().kind != TokKind::End) {
            FunctionSpec f = parse_function();
            if (!names.insert(f.name).second)
                throw ParseError(f.loc.line, f.loc.col, "duplicate definition of '" + f.name + "'");
            out.push_back(std::move(f));
        }
        return out;
    }

private:
    const Token& peek(size_t ahead = 0) const {
        size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    [[noreturn]] void fail(const Token& t, const std::string& msg) const {
        throw ParseError(t.line, t.col, msg);
    }

    Token expect_punct(std::string_view p) {
        Token t = next();
        if (t.kind != TokKind::Punct || t.text != p)
            fail(t, "expected '" + std::string(p) + "', got '" + t.text + "'");
        return t;
    }
    Token expect_ident(std::string_view what) {
        Token t = next();
        if (t.kind != TokKind::Ident) fail(t, "expected " + std::string(what));
        return t;
    }
    void expect_keyword(std::string_view kw) {
        Token t = next();
        if (t.kind != TokKind::Ident || t.text != kw)
            fail(t, "expected '" + std::string(kw) + "'");
    }
    bool accept_punct(std::string_view p) {
        if (peek().kind == TokKind::Punct && peek().text == p) {
            next();
            return true;
        }
        return false;
    }
    bool peek_keyword(std::string_view kw) const {
        return peek().kind == TokKind::Ident && peek().text == kw;
    }

    Rational parse_literal_token(const Token& t) {
        auto v = parse_decimal(t.text);
        if (!v) fail(t, "malformed numeric literal '" + t.text + "'");
        return *v;
    }

    FunctionSpec parse_function() {
        Token def = next();
        if (def.kind != TokKind::Ident || def.text != "def") fail(def, "expected 'def'");
        FunctionSpec f;
        f.loc = {def.line, def.col};
        f.name = expect_ident("function name").text;
        expect_punct("(");
        while (true) {
            Token p = expect_ident("parameter name");
            if (scope_.count(p.text)) fail(p, "duplicate parameter '" + p.text + "'");
            f.params.push_back(p.text);
            scope_[p.text] = p.text;
            expect_punct(":");
            expect_keyword("Real");
            if (!accept_punct(",")) break;
        }
        expect_punct(")");
        expect_punct(":");
        expect_keyword("Real");
        expect_punct("=");
        expect_punct("{");

        std::map<std::string, std::optional<Rational>> lov, hiv;
        if (peek_keyword("require")) parse_require(f, lov, hiv);
        for (const std::string& p : f.params) {
            if (!lov[p] || !hiv[p])
                fail(toks_[pos_], "input variable '" + p + "' has no bounded range");
            if (*lov[p] > *hiv[p]) fail(toks_[pos_], "empty input range for '" + p + "'");
            f.input_ranges.emplace(p, Interval(*lov[p], *hiv[p]));
        }

        // val statements, then the result expression
        std::vector<std::pair<std::string, ExprPtr>> bindings;
        while (peek_keyword("val")) {
            next();
            Token nm = expect_ident("binding name");
            expect_punct("=");
            ExprPtr bound = parse_expr();
            std::string unique = fresh_name(nm.text);
            bindings.emplace_back(unique, bound);
            scope_[nm.text] = unique;
        }
        ExprPtr body = parse_expr();
        for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
            body = make_let(it->first, it->second, body);
        f.body = body;
        expect_punct("}");

        if (peek_keyword("ensuring")) {
            next();
            expect_punct("(");
            Token r1 = expect_ident("result name");
            expect_punct("=>");
            Token r2 = expect_ident("result name");
            if (r1.text != r2.text) fail(r2, "ensuring clause must reference '" + r1.text + "'");
            expect_punct("+/-");
            Token lit = next();
            if (lit.kind != TokKind::Number) fail(lit, "expected error bound literal");
            Rational bound = parse_literal_token(lit);
            if (bound.sign() <= 0) fail(lit, "error bound must be positive");
            f.result_name = r1.text;
            f.target_error = bound;
            expect_punct(")");
        }
        scope_.clear();
        used_.clear();
        return f;
    }

    void parse_require(FunctionSpec& f, std::map<std::string, std::optional<Rational>>& lov,
                       std::map<std::string, std::optional<Rational>>& hiv) {
        expect_keyword("require");
        expect_punct("(");
        do {
            // side <= side, one side a literal, the other a parameter
            auto parse_side = [&]() -> std::pair<bool, std::pair<std::string, Rational>> {
                if (accept_punct("-")) {
                    Token n = next();
                    if (n.kind != TokKind::Number) fail(n, "expected numeric literal");
                    return {false, {"", -parse_literal_token(n)}};
                }
                Token t = next();
                if (t.kind == TokKind::Number) return {false, {"", parse_literal_token(t)}};
                if (t.kind == TokKind::Ident) {
                    if (std::find(f.params.begin(), f.params.end(), t.text) == f.params.end())
                        fail(t, "range constraint on non-parameter '" + t.text + "'");
                    return {true, {t.text, Rational()}};
                }
                fail(t, "malformed range constraint");
            };
            Token at = peek();
            auto lhs = parse_side();
            expect_punct("<=");
            auto rhs = parse_side();
            if (!lhs.first && rhs.first) {
                lov[rhs.second.first] = lhs.second.second;
            } else if (lhs.first && !rhs.first) {
                hiv[lhs.second.first] = rhs.second.second;
            } else {
                fail(at, "range constraint must compare a parameter with a literal");
            }
        } while (accept_punct("&&"));
        expect_punct(")");
    }

    // shadowing bindings are alpha-renamed so let names stay unique
    std::string fresh_name(const std::string& base) {
        std::string name = base;
        int k = 0;
        while (used_.count(name) || scope_.count(name)) name = base + "_" + std::to_string(++k);
        used_.insert(name);
        return name;
    }

    // expr := term (('+'|'-') term)*
    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        while (peek().kind == TokKind::Punct && (peek().text == "+" || peek().text == "-")) {
            bool add = next().text == "+";
            ExprPtr rhs = parse_term();
            e = add ? make_add(e, rhs) : make_sub(e, rhs);
        }
        return e;
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        while (peek().kind == TokKind::Punct && (peek().text == "*" || peek().text == "/")) {
            bool mul = next().text == "*";
            ExprPtr rhs = parse_factor();
            e = mul ? make_mul(e, rhs) : make_div(e, rhs);
        }
        return e;
    }

    // unary minus binds tighter than * and /; a minus directly before a
    // literal folds into the constant
    ExprPtr parse_factor() {
        if (peek().kind == TokKind::Punct && peek().text == "-") {
            Token m = next();
            if (peek().kind == TokKind::Number) {
                Token n = next();
                return make_const(-parse_literal_token(n), {n.line, n.col});
            }
            return make_unary(ExprKind::Neg, parse_factor(), {m.line, m.col});
        }
        return parse_atom();
    }

    ExprPtr parse_atom() {
        Token t = next();
        if (t.kind == TokKind::Number) return make_const(parse_literal_token(t), {t.line, t.col});
        if (t.kind == TokKind::Punct && t.text == "(") {
            ExprPtr e = parse_expr();
            expect_punct(")");
            return e;
        }
        if (t.kind == TokKind::Ident) {
            if (t.text == "sqrt") {
                expect_punct("(");
                ExprPtr arg = parse_expr();
                expect_punct(")");
                return make_unary(ExprKind::Sqrt, arg, {t.line, t.col});
            }
            auto it = scope_.find(t.text);
            if (it == scope_.end()) fail(t, "unknown identifier '" + t.text + "'");
            return make_var(it->second, {t.line, t.col});
        }
        fail(t, "expected expression, got '" + t.text + "'");
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::map<std::string, std::string> scope_; // source name -> unique name
    std::set<std::string> used_;
};

} // namespace detail

/// Parses a UTF-8 source text with one or more function definitions.
inline std::vector<FunctionSpec> parse_functions(std::string_view src) {
    return detail::Parser(src).parse_file();
}

/// Renders a function back to source form; parse(print(f)) reproduces f.
inline std::string print_function(const FunctionSpec& f) {
    std::string out = "def " + f.name + "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
        if (i) out += ", ";
        out += f.params[i] + ": Real";
    }
    out += "): Real = {\n";
    if (!f.params.empty()) {
        out += "  require(";
        for (size_t i = 0; i < f.params.size(); ++i) {
            const Interval& r = f.input_ranges.at(f.params[i]);
            if (i) out += " && ";
            out += exact_decimal_string(r.lo) + " <= " + f.params[i] + " && " + f.params[i] +
                   " <= " + exact_decimal_string(r.hi);
        }
        out += ")\n";
    }
    ExprPtr body = f.body;
    while (body->kind == ExprKind::Let) {
        out += "  val " + body->name + " = " + to_source(body->a) + "\n";
        body = body->b;
    }
    out += "  " + to_source(body) + "\n}";
    if (f.target_error) {
        out += " ensuring(" + f.result_name + " => " + f.result_name + " +/- " +
               exact_decimal_string(*f.target_error) + ")";
    }
    out += "\n";
    return out;
}

} // namespace mixprec
