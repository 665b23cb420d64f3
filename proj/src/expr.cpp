#include "nestcheck/expr.hpp"

#include <cctype>
#include <map>
#include <sstream>

#include "nestcheck/error.hpp"

namespace nestcheck {

char symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return '+';
    case BinOp::Sub: return '-';
    case BinOp::Mul: return '*';
    case BinOp::Div: return '/';
  }
  return '?';
}

namespace {

bool any_mc(const std::vector<Binding>& bs) {
  for (const auto& b : bs) {
    if (b.expr->has_mc) return true;
  }
  return false;
}

ExprPtr make(Expr::Node node, SourcePos pos, bool has_mc) {
  auto e = std::make_shared<Expr>();
  e->node = std::move(node);
  e->pos = pos;
  e->has_mc = has_mc;
  return e;
}

}  // namespace

ExprPtr Expr::lit(mpz_class value, SourcePos pos) {
  return make(ast::Lit{std::move(value)}, pos, false);
}

ExprPtr Expr::op(BinOp op, ExprPtr lhs, ExprPtr rhs, SourcePos pos) {
  const bool has = lhs->has_mc || rhs->has_mc;
  return make(ast::Op{op, std::move(lhs), std::move(rhs)}, pos, has);
}

ExprPtr Expr::mc(ModelRef model, Property property, std::size_t ordinal, SourcePos pos) {
  return make(ast::Mc{std::move(model), std::move(property), ordinal}, pos, true);
}

ExprPtr Expr::constant(std::string name, SourcePos pos) {
  return make(ast::Const{std::move(name)}, pos, false);
}

ExprPtr Expr::let(std::vector<Binding> bindings, ExprPtr body, SourcePos pos) {
  const bool has = any_mc(bindings) || body->has_mc;
  return make(ast::Let{std::move(bindings), std::move(body)}, pos, has);
}

namespace {

bool same_bindings(const std::vector<Binding>& a, const std::vector<Binding>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || !same_structure(*a[i].expr, *b[i].expr)) return false;
  }
  return true;
}

}  // namespace

bool same_structure(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, ast::Lit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, ast::Op>) {
          return x.op == y.op && same_structure(*x.lhs, *y.lhs) && same_structure(*x.rhs, *y.rhs);
        } else if constexpr (std::is_same_v<T, ast::Mc>) {
          return x.property == y.property && x.model.name == y.model.name &&
                 x.model.instantiated == y.model.instantiated &&
                 same_bindings(x.model.args, y.model.args);
        } else if constexpr (std::is_same_v<T, ast::Const>) {
          return x.name == y.name;
        } else {
          return same_bindings(x.bindings, y.bindings) && same_structure(*x.body, *y.body);
        }
      },
      a.node);
}

// ---------------------------------------------------------------------------
// Lexer

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&] {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    const SourcePos pos{line, col};
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        digits.push_back(text[i]);
        advance();
      }
      out.push_back({TokenKind::Int, std::move(digits), pos});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
        id.push_back(text[i]);
        advance();
      }
      TokenKind kind = TokenKind::Ident;
      if (id == "let") kind = TokenKind::Let;
      else if (id == "in") kind = TokenKind::In;
      else if (id == "mc") kind = TokenKind::Mc;
      out.push_back({kind, std::move(id), pos});
      continue;
    }
    if (c == '"') {
      advance();
      std::string s;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\n') throw SyntaxError("unterminated string", pos.line, pos.column);
        if (text[i] == '\\' && i + 1 < text.size()) advance();
        s.push_back(text[i]);
        advance();
      }
      if (i >= text.size()) throw SyntaxError("unterminated string", pos.line, pos.column);
      advance();
      out.push_back({TokenKind::String, std::move(s), pos});
      continue;
    }
    TokenKind kind;
    switch (c) {
      case '(': kind = TokenKind::LParen; break;
      case ')': kind = TokenKind::RParen; break;
      case ',': kind = TokenKind::Comma; break;
      case '=': kind = TokenKind::Equals; break;
      case '+': kind = TokenKind::Plus; break;
      case '-': kind = TokenKind::Minus; break;
      case '*': kind = TokenKind::Star; break;
      case '/': kind = TokenKind::Slash; break;
      default:
        throw SyntaxError(std::string("illegal character '") + c + "'", pos.line, pos.column);
    }
    out.push_back({kind, std::string(1, c), pos});
    advance();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {
    SourcePos end = toks_.empty() ? SourcePos{1, 1} : toks_.back().pos;
    toks_.push_back({TokenKind::End, "", end});
  }

  ExprPtr run() {
    auto e = expr();
    if (peek().kind != TokenKind::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, peek().pos.line, peek().pos.column);
  }

  const Token& expect(TokenKind kind, const char* what) {
    if (peek().kind != kind) {
      fail(std::string("expected ") + what +
           (peek().kind == TokenKind::End ? ", found end of input"
                                          : ", found '" + peek().text + "'"));
    }
    return next();
  }

  ExprPtr expr() {
    auto lhs = term();
    while (peek().kind == TokenKind::Plus || peek().kind == TokenKind::Minus) {
      const auto& t = next();
      auto rhs = term();
      lhs = Expr::op(t.kind == TokenKind::Plus ? BinOp::Add : BinOp::Sub, lhs, rhs, t.pos);
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = primary();
    while (peek().kind == TokenKind::Star || peek().kind == TokenKind::Slash) {
      const auto& t = next();
      auto rhs = primary();
      lhs = Expr::op(t.kind == TokenKind::Star ? BinOp::Mul : BinOp::Div, lhs, rhs, t.pos);
    }
    return lhs;
  }

  ExprPtr primary() {
    const auto& t = peek();
    switch (t.kind) {
      case TokenKind::Int:
        next();
        return Expr::lit(mpz_class(t.text), t.pos);
      case TokenKind::Ident:
        next();
        return Expr::constant(t.text, t.pos);
      case TokenKind::LParen: {
        next();
        auto e = expr();
        expect(TokenKind::RParen, "')'");
        return e;
      }
      case TokenKind::Mc:
        return mc_call();
      case TokenKind::Let:
        return let_expr();
      case TokenKind::End:
        fail("unexpected end of input");
      default:
        fail("unexpected '" + t.text + "'");
    }
  }

  ExprPtr mc_call() {
    const auto pos = next().pos;
    expect(TokenKind::LParen, "'(' after mc");
    ModelRef model;
    model.name = expect(TokenKind::Ident, "a model name").text;
    if (peek().kind == TokenKind::LParen) {
      next();
      model.instantiated = true;
      if (peek().kind != TokenKind::RParen) model.args = binding_list();
      expect(TokenKind::RParen, "')' after model arguments");
    }
    expect(TokenKind::Comma, "',' between model and property");
    const auto& prop_tok = expect(TokenKind::String, "a quoted property");
    Property prop;
    try {
      prop = parse_property(prop_tok.text);
    } catch (const SyntaxError& e) {
      throw SyntaxError(e.what(), prop_tok.pos.line, prop_tok.pos.column);
    }
    expect(TokenKind::RParen, "')' closing mc");
    return Expr::mc(std::move(model), std::move(prop), mc_count_++, pos);
  }

  ExprPtr let_expr() {
    const auto pos = next().pos;
    auto bindings = binding_list();
    expect(TokenKind::In, "'in'");
    auto body = expr();
    return Expr::let(std::move(bindings), std::move(body), pos);
  }

  std::vector<Binding> binding_list() {
    std::vector<Binding> out;
    for (;;) {
      Binding b;
      b.name = expect(TokenKind::Ident, "an identifier").text;
      expect(TokenKind::Equals, "'='");
      b.expr = expr();
      out.push_back(std::move(b));
      if (peek().kind != TokenKind::Comma) break;
      next();
    }
    return out;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t mc_count_ = 0;
};

// Static checks.

[[noreturn]] void static_fail(const std::string& msg, SourcePos pos) {
  throw StaticError(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + msg);
}

void check_distinct(const std::vector<Binding>& bs, SourcePos pos, const char* where) {
  std::set<std::string> seen;
  for (const auto& b : bs) {
    if (!seen.insert(b.name).second) {
      static_fail("duplicate " + std::string(where) + " '" + b.name + "'", pos);
    }
  }
}

void free_in(const Expr& e, std::multiset<std::string>& bound, std::set<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ast::Op>) {
          free_in(*x.lhs, bound, out);
          free_in(*x.rhs, bound, out);
        } else if constexpr (std::is_same_v<T, ast::Mc>) {
          for (const auto& a : x.model.args) free_in(*a.expr, bound, out);
        } else if constexpr (std::is_same_v<T, ast::Const>) {
          if (bound.count(x.name) == 0) out.insert(x.name);
        } else if constexpr (std::is_same_v<T, ast::Let>) {
          for (const auto& b : x.bindings) free_in(*b.expr, bound, out);
          for (const auto& b : x.bindings) bound.insert(b.name);
          free_in(*x.body, bound, out);
          for (const auto& b : x.bindings) bound.erase(bound.find(b.name));
        }
      },
      e.node);
}

void check_node(const Expr& e) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ast::Op>) {
          check_node(*x.lhs);
          check_node(*x.rhs);
        } else if constexpr (std::is_same_v<T, ast::Mc>) {
          check_distinct(x.model.args, e.pos, "argument");
          for (const auto& a : x.model.args) check_node(*a.expr);
        } else if constexpr (std::is_same_v<T, ast::Let>) {
          check_distinct(x.bindings, e.pos, "binding");
          std::set<std::string> names;
          for (const auto& b : x.bindings) names.insert(b.name);
          for (const auto& b : x.bindings) {
            for (const auto& ref : free_constants(*b.expr)) {
              // A binding's own name inside its expression means the enclosing
              // binding (lets are not recursive); unbound uses are reported below.
              if (names.count(ref) == 0 || ref == b.name) continue;
              static_fail("binding '" + b.name + "' refers to sibling binding '" + ref +
                              "' (bindings of one let must be independent)",
                          b.expr->pos);
            }
            check_node(*b.expr);
          }
          check_node(*x.body);
        }
      },
      e.node);
}

}  // namespace

ExprPtr parse_problem_unchecked(std::string_view text) { return Parser(tokenize(text)).run(); }

std::set<std::string> free_constants(const Expr& e) {
  std::multiset<std::string> bound;
  std::set<std::string> out;
  free_in(e, bound, out);
  return out;
}

void check_static(const Expr& e) {
  check_node(e);
  const auto free = free_constants(e);
  if (!free.empty()) {
    std::string names;
    for (const auto& n : free) names += (names.empty() ? "" : ", ") + n;
    throw StaticError("unbound constant(s): " + names);
  }
}

ExprPtr parse_problem(std::string_view text) {
  auto e = parse_problem_unchecked(text);
  check_static(*e);
  return e;
}

// ---------------------------------------------------------------------------
// Printer

namespace {

int precedence(const Expr& e) {
  if (const auto* op = std::get_if<ast::Op>(&e.node)) {
    return (op->op == BinOp::Add || op->op == BinOp::Sub) ? 1 : 2;
  }
  return 3;
}

void print(std::ostream& os, const Expr& e);

void print_bindings(std::ostream& os, const std::vector<Binding>& bs) {
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (i) os << ", ";
    os << bs[i].name << " = ";
    print(os, *bs[i].expr);
  }
}

void print_operand(std::ostream& os, const Expr& e, bool parens) {
  if (parens) os << '(';
  print(os, e);
  if (parens) os << ')';
}

void print_quoted(std::ostream& os, const std::string& s) {
  os << '"';
  for (char c : s) {
    if (c == '"' || c == '\\') os << '\\';
    os << c;
  }
  os << '"';
}

void print(std::ostream& os, const Expr& e) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ast::Lit>) {
          os << x.value.get_str();
        } else if constexpr (std::is_same_v<T, ast::Op>) {
          const int p = precedence(e);
          const bool lhs_let = std::holds_alternative<ast::Let>(x.lhs->node);
          const bool rhs_let = std::holds_alternative<ast::Let>(x.rhs->node);
          print_operand(os, *x.lhs, lhs_let || precedence(*x.lhs) < p);
          os << ' ' << symbol(x.op) << ' ';
          print_operand(os, *x.rhs, rhs_let || precedence(*x.rhs) <= p);
        } else if constexpr (std::is_same_v<T, ast::Mc>) {
          os << "mc(" << to_string(x.model) << ", ";
          print_quoted(os, to_string(x.property));
          os << ')';
        } else if constexpr (std::is_same_v<T, ast::Const>) {
          os << x.name;
        } else {
          os << "let ";
          print_bindings(os, x.bindings);
          os << " in ";
          print(os, *x.body);
        }
      },
      e.node);
}

}  // namespace

std::string to_string(const ModelRef& m) {
  std::ostringstream os;
  os << m.name;
  if (m.instantiated) {
    os << '(';
    print_bindings(os, m.args);
    os << ')';
  }
  return os.str();
}

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

}  // namespace nestcheck
