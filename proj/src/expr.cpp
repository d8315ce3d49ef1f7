#include "fragcoag/expr.hpp"

#include <array>
#include <cctype>
#include <cstdlib>

#include "fragcoag/errors.hpp"

namespace fragcoag {

namespace {

struct Token {
    enum Kind { Number, Ident, Plus, Minus, Star, Slash, LParen, RParen, End } kind;
    double value = 0.0;
    char ident = 0;
    std::size_t pos = 0;
};

class Lexer {
public:
    Lexer(const std::string& s) : s_(s) {}

    Token next() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        Token t;
        t.pos = pos_;
        if (pos_ >= s_.size()) {
            t.kind = Token::End;
            return t;
        }
        char c = s_[pos_];
        switch (c) {
        case '+': ++pos_; t.kind = Token::Plus; return t;
        case '-': ++pos_; t.kind = Token::Minus; return t;
        case '*': ++pos_; t.kind = Token::Star; return t;
        case '/': ++pos_; t.kind = Token::Slash; return t;
        case '(': ++pos_; t.kind = Token::LParen; return t;
        case ')': ++pos_; t.kind = Token::RParen; return t;
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            t.value = std::strtod(begin, &end);
            if (end == begin)
                throw ConfigError("expr: bad number at position " + std::to_string(pos_) + " in \"" + s_ + "\"");
            pos_ += static_cast<std::size_t>(end - begin);
            t.kind = Token::Number;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string name = s_.substr(start, pos_ - start);
            if (name.size() != 1 || (name[0] != 'i' && name[0] != 'j' && name[0] != 'm' && name[0] != 'b'))
                throw ConfigError("expr: unknown identifier \"" + name + "\" in \"" + s_ + "\"");
            t.kind = Token::Ident;
            t.ident = name[0];
            return t;
        }
        throw ConfigError("expr: unexpected character '" + std::string(1, c) + "' in \"" + s_ + "\"");
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

// Recursive-descent parser emitting postfix ops.
class ExprParser {
public:
    ExprParser(const std::string& src, unsigned allowed) : lex_(src), src_(src), allowed_(allowed) {
        advance();
    }

    Expr run() {
        Expr e;
        e.source_ = src_;
        parse_expr(e);
        if (cur_.kind != Token::End)
            throw ConfigError("expr: trailing input at position " + std::to_string(cur_.pos) + " in \"" + src_ + "\"");
        if (e.ops_.empty())
            throw ConfigError("expr: empty expression");
        return e;
    }

private:
    Lexer lex_;
    Token cur_;
    const std::string& src_;
    unsigned allowed_;

    void advance() { cur_ = lex_.next(); }

    void parse_expr(Expr& e) {
        parse_term(e);
        while (cur_.kind == Token::Plus || cur_.kind == Token::Minus) {
            bool add = cur_.kind == Token::Plus;
            advance();
            parse_term(e);
            e.ops_.push_back({add ? Expr::OpKind::Add : Expr::OpKind::Sub, 0.0, 0});
        }
    }

    void parse_term(Expr& e) {
        parse_factor(e);
        while (cur_.kind == Token::Star || cur_.kind == Token::Slash) {
            bool mul = cur_.kind == Token::Star;
            advance();
            parse_factor(e);
            e.ops_.push_back({mul ? Expr::OpKind::Mul : Expr::OpKind::Div, 0.0, 0});
        }
    }

    void parse_factor(Expr& e) {
        if (cur_.kind == Token::Minus) {
            advance();
            parse_factor(e);
            e.ops_.push_back({Expr::OpKind::Neg, 0.0, 0});
            return;
        }
        parse_primary(e);
    }

    void parse_primary(Expr& e) {
        switch (cur_.kind) {
        case Token::Number:
            e.ops_.push_back({Expr::OpKind::PushConst, cur_.value, 0});
            advance();
            return;
        case Token::Ident: {
            int var;
            unsigned bit;
            switch (cur_.ident) {
            case 'i': var = 0; bit = Expr::VarI; break;
            case 'j': var = 1; bit = Expr::VarJ; break;
            case 'm': var = 2; bit = Expr::VarM; break;
            default:  var = 3; bit = Expr::VarB; break;
            }
            if (!(allowed_ & bit))
                throw ConfigError("expr: variable '" + std::string(1, cur_.ident) +
                                  "' not allowed in this context: \"" + src_ + "\"");
            e.vars_used_ |= bit;
            e.ops_.push_back({Expr::OpKind::PushVar, 0.0, var});
            advance();
            return;
        }
        case Token::LParen: {
            advance();
            parse_expr(e);
            if (cur_.kind != Token::RParen)
                throw ConfigError("expr: missing ')' in \"" + src_ + "\"");
            advance();
            return;
        }
        default:
            throw ConfigError("expr: expected a value at position " + std::to_string(cur_.pos) +
                              " in \"" + src_ + "\"");
        }
    }
};

Expr Expr::parse(const std::string& source, unsigned allowed) {
    return ExprParser(source, allowed).run();
}

double Expr::eval(double i, double j, double m, double b) const {
    const std::array<double, 4> vars{i, j, m, b};
    // postfix depth is bounded by expression length; 64 covers any sane config
    std::array<double, 64> stack;
    std::size_t top = 0;
    for (const Op& op : ops_) {
        switch (op.kind) {
        case OpKind::PushConst:
            stack[top++] = op.value;
            break;
        case OpKind::PushVar:
            stack[top++] = vars[static_cast<std::size_t>(op.var)];
            break;
        case OpKind::Add:
            stack[top - 2] = stack[top - 2] + stack[top - 1];
            --top;
            break;
        case OpKind::Sub:
            stack[top - 2] = stack[top - 2] - stack[top - 1];
            --top;
            break;
        case OpKind::Mul:
            stack[top - 2] = stack[top - 2] * stack[top - 1];
            --top;
            break;
        case OpKind::Div:
            stack[top - 2] = stack[top - 2] / stack[top - 1];
            --top;
            break;
        case OpKind::Neg:
            stack[top - 1] = -stack[top - 1];
            break;
        }
        if (top >= stack.size())
            throw ConfigError("expr: expression too deep: \"" + source_ + "\"");
    }
    return stack[0];
}

} // namespace fragcoag
