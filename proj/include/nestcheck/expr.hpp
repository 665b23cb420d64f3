#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nestcheck/checker.hpp"

namespace nestcheck {

struct SourcePos {
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinOp { Add, Sub, Mul, Div };

char symbol(BinOp op);

struct Binding {
  std::string name;
  ExprPtr expr;
};

/// A bare model name, or a meta-model instantiation `Name(a = e, ...)`.
struct ModelRef {
  std::string name;
  bool instantiated = false;
  std::vector<Binding> args;
};

namespace ast {

struct Lit {
  mpz_class value;
};
struct Op {
  BinOp op;
  ExprPtr lhs, rhs;
};
struct Mc {
  ModelRef model;
  Property property;
  /// Post-order index among the mc nodes of the whole problem.
  std::size_t ordinal = 0;
};
struct Const {
  std::string name;
};
struct Let {
  std::vector<Binding> bindings;
  ExprPtr body;
};

}  // namespace ast

struct Expr {
  using Node = std::variant<ast::Lit, ast::Op, ast::Mc, ast::Const, ast::Let>;

  Node node;
  SourcePos pos;
  /// Whether any mc call occurs below this node.
  bool has_mc = false;

  static ExprPtr lit(mpz_class value, SourcePos pos = {});
  static ExprPtr op(BinOp op, ExprPtr lhs, ExprPtr rhs, SourcePos pos = {});
  static ExprPtr mc(ModelRef model, Property property, std::size_t ordinal, SourcePos pos = {});
  static ExprPtr constant(std::string name, SourcePos pos = {});
  static ExprPtr let(std::vector<Binding> bindings, ExprPtr body, SourcePos pos = {});
};

/// Structural equality; source positions and mc ordinals are ignored.
bool same_structure(const Expr& a, const Expr& b);

enum class TokenKind {
  Ident, Int, String, LParen, RParen, Comma, Equals, Plus, Minus, Star, Slash, Let, In, Mc, End
};

struct Token {
  TokenKind kind;
  std::string text;  // identifier name, digits, or unquoted string contents
  SourcePos pos;
};

/// Splits problem text into tokens (no trailing End token). Throws SyntaxError.
std::vector<Token> tokenize(std::string_view text);

/// Parses and statically checks a problem expression. Throws SyntaxError or
/// StaticError (duplicate ids, sibling references, unbound constants).
ExprPtr parse_problem(std::string_view text);

/// Parses without the static checks.
ExprPtr parse_problem_unchecked(std::string_view text);

/// Static checks run by `parse_problem`.
void check_static(const Expr& e);

std::set<std::string> free_constants(const Expr& e);

/// Concrete syntax that parses back to the same structure.
std::string to_string(const Expr& e);
std::string to_string(const ModelRef& m);

}  // namespace nestcheck
