#pragma once

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "hyperjoin/frontend/ast.hpp"

namespace hyperjoin {

namespace detail {

enum class Tok : std::uint8_t {
  ident, number, string, implies, lparen, rparen, comma, semicolon, colon, dot, equals, star,
  lbracket, rbracket, plus, minus, slash, lagg, ragg, end,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

inline const char* describe(Tok t) {
  switch (t) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::string: return "string constant";
    case Tok::implies: return "':-'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::semicolon: return "';'";
    case Tok::colon: return "':'";
    case Tok::dot: return "'.'";
    case Tok::equals: return "'='";
    case Tok::star: return "'*'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::slash: return "'/'";
    case Tok::lagg: return "'<<'";
    case Tok::ragg: return "'>>'";
    case Tok::end: return "end of input";
  }
  return "?";
}

inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Identifiers may start with a digit (4Clique) and end in primes (x');
/// all-digit words, optionally with a fraction, are numbers.
inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n' || c == ' ' || c == '\t' || c == '\r') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token tok;
    tok.line = line;
    tok.column = col;
    if (ident_char(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      std::string word(src.substr(i, j - i));
      bool digits = std::all_of(word.begin(), word.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
      if (digits) {
        if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
          std::size_t k = j + 1;
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          word = std::string(src.substr(i, k - i));
          j = k;
        }
        tok.kind = Tok::number;
      } else {
        while (j < src.size() && src[j] == '\'') {
          word.push_back('\'');
          ++j;
        }
        tok.kind = Tok::ident;
      }
      tok.text = std::move(word);
      advance(j - i);
      out.push_back(std::move(tok));
      continue;
    }
    if (c == '`' || c == '"' || c == '\'') {
      std::size_t j = i + 1;
      auto closes = [&](char ch) { return c == '`' ? (ch == '`' || ch == '\'') : ch == c; };
      while (j < src.size() && !closes(src[j]) && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] == '\n') throw SyntaxError("unterminated string constant", line, col);
      tok.kind = Tok::string;
      tok.text = std::string(src.substr(i + 1, j - i - 1));
      advance(j + 1 - i);
      out.push_back(std::move(tok));
      continue;
    }
    auto two = src.substr(i, 2);
    if (two == ":-") { tok.kind = Tok::implies; advance(2); out.push_back(tok); continue; }
    if (two == "<<") { tok.kind = Tok::lagg; advance(2); out.push_back(tok); continue; }
    if (two == ">>") { tok.kind = Tok::ragg; advance(2); out.push_back(tok); continue; }
    switch (c) {
      case '(': tok.kind = Tok::lparen; break;
      case ')': tok.kind = Tok::rparen; break;
      case ',': tok.kind = Tok::comma; break;
      case ';': tok.kind = Tok::semicolon; break;
      case ':': tok.kind = Tok::colon; break;
      case '.': tok.kind = Tok::dot; break;
      case '=': tok.kind = Tok::equals; break;
      case '*': tok.kind = Tok::star; break;
      case '[': tok.kind = Tok::lbracket; break;
      case ']': tok.kind = Tok::rbracket; break;
      case '+': tok.kind = Tok::plus; break;
      case '-': tok.kind = Tok::minus; break;
      case '/': tok.kind = Tok::slash; break;
      case '!': case '~':
        throw SyntaxError("negation is not supported", line, col);
      default:
        throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
    }
    tok.text = std::string(1, c);
    advance(1);
    out.push_back(std::move(tok));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program program() {
    Program rules;
    while (peek().kind != Tok::end) rules.push_back(rule());
    return rules;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const std::string& message, const Token& at) const {
    throw SyntaxError(message, at.line, at.column);
  }
  const Token& expect(Tok kind, const char* context) {
    if (peek().kind != kind)
      fail(std::string("expected ") + describe(kind) + " " + context + ", found " + found(peek()), peek());
    return next();
  }
  static std::string found(const Token& t) {
    return t.kind == Tok::end ? "end of input" : std::string("'") + t.text + "'";
  }

  Rule rule() {
    Rule r;
    const Token& name = expect(Tok::ident, "at start of rule head");
    r.head_name = name.text;
    r.line = name.line;
    if (name.text == "not") fail("negation is not supported", name);
    expect(Tok::lparen, "after rule name");
    if (peek().kind == Tok::ident) {
      r.head_keys.push_back(next().text);
      while (accept(Tok::comma)) r.head_keys.push_back(expect(Tok::ident, "in head keys").text);
    }
    if (accept(Tok::semicolon)) {
      HeadAnnotation ann;
      ann.alias = expect(Tok::ident, "as annotation alias").text;
      expect(Tok::colon, "after annotation alias");
      const Token& type = expect(Tok::ident, "as annotation type");
      if (type.text == "int") ann.type = ValueType::int_;
      else if (type.text == "long") ann.type = ValueType::long_;
      else if (type.text == "float" || type.text == "double") ann.type = ValueType::float_;
      else fail("unknown annotation type '" + type.text + "'", type);
      r.head_annotation = ann;
    }
    expect(Tok::rparen, "to close rule head");
    if (accept(Tok::star)) {
      r.recursion.kind = Recursion::Kind::fixpoint;
      if (accept(Tok::lbracket)) {
        const Token& var = expect(Tok::ident, "in recursion bound");
        if (var.text != "i") fail("recursion bound must be written [i=K]", var);
        expect(Tok::equals, "in recursion bound");
        const Token& k = expect(Tok::number, "as iteration count");
        std::uint32_t iterations = 0;
        auto [p, ec] = std::from_chars(k.text.data(), k.text.data() + k.text.size(), iterations);
        if (ec != std::errc() || p != k.text.data() + k.text.size()) fail("iteration count must be an integer", k);
        r.recursion = {Recursion::Kind::naive, iterations};
        expect(Tok::rbracket, "to close recursion bound");
      }
    }
    const Token& arrow = expect(Tok::implies, "after rule head");
    if (peek().kind != Tok::ident) {
      if (peek().kind == Tok::dot || peek().kind == Tok::end) fail("rule has no body atoms", peek().kind == Tok::end ? arrow : peek());
      fail("expected body atom, found " + found(peek()), peek());
    }
    r.body.push_back(atom());
    while (accept(Tok::comma)) r.body.push_back(atom());
    if (accept(Tok::semicolon)) {
      r.expr_alias = expect(Tok::ident, "as annotation alias").text;
      expect(Tok::equals, "after annotation alias");
      aggregates_ = 0;
      r.expr = expression();
    }
    expect(Tok::dot, "at end of rule");
    return r;
  }

  Atom atom() {
    const Token& name = expect(Tok::ident, "as relation name");
    if (name.text == "not") fail("negation is not supported", name);
    Atom a;
    a.relation = name.text;
    a.line = name.line;
    a.column = name.column;
    expect(Tok::lparen, "after relation name");
    if (peek().kind != Tok::rparen) {
      a.terms.push_back(term());
      while (accept(Tok::comma)) a.terms.push_back(term());
    }
    expect(Tok::rparen, "to close atom");
    return a;
  }

  Term term() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::ident: return Term::variable(t.text);
      case Tok::number:
      case Tok::string: return Term::constant(t.text);
      default: fail("expected variable or constant, found " + found(t), t);
    }
  }

  ExprPtr expression() {
    ExprPtr lhs = product();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      char op = next().text[0];
      lhs = Expr::make_binary(op, lhs, product());
    }
    return lhs;
  }

  ExprPtr product() {
    ExprPtr lhs = unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      char op = next().text[0];
      lhs = Expr::make_binary(op, lhs, unary());
    }
    return lhs;
  }

  ExprPtr unary() {
    if (accept(Tok::minus)) return Expr::make_negate(unary());
    return primary();
  }

  ExprPtr primary() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::number: {
        double value = 0;
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        return Expr::make_number(value, t.text, t.text.find('.') != std::string::npos);
      }
      case Tok::ident: return Expr::make_ref(t.text);
      case Tok::lparen: {
        ExprPtr inner = expression();
        expect(Tok::rparen, "to close parenthesis");
        return inner;
      }
      case Tok::lagg: {
        if (++aggregates_ > 1) fail("at most one aggregate per annotation expression", t);
        const Token& op = expect(Tok::ident, "as aggregate operator");
        AggOp agg;
        if (op.text == "SUM") agg = AggOp::sum;
        else if (op.text == "MIN") agg = AggOp::min;
        else if (op.text == "MAX") agg = AggOp::max;
        else if (op.text == "COUNT") agg = AggOp::count;
        else fail("unknown aggregate '" + op.text + "'", op);
        expect(Tok::lparen, "after aggregate operator");
        std::string var;
        if (accept(Tok::star)) var = "*";
        else var = expect(Tok::ident, "as aggregated variable").text;
        expect(Tok::rparen, "to close aggregate");
        expect(Tok::ragg, "to close aggregate");
        return Expr::make_aggregate(agg, var);
      }
      default: fail("expected expression, found " + found(t), t);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int aggregates_ = 0;
};

}  // namespace detail

/// Parses rules in source order. Throws SyntaxError with line and column.
inline Program parse_program(std::string_view text) {
  detail::Parser parser(detail::tokenize(text));
  return parser.program();
}

}  // namespace hyperjoin
