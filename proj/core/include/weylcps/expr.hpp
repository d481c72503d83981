// Arithmetic expression language for metric coefficients and warp functions.
// Expressions parse to an immutable AST and compile to linear evaluation
// tapes that run over either plain doubles or Jet2 scalars.
//
// Grammar (whitespace-insensitive):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' exponent)*        // exponent must be a numeric literal
//   atom   := number | 'pi' | name | name '(' expr ')' | '(' expr ')'
// Functions: sin, cos, exp, log, sqrt, tanh. Same-precedence operators are
// left-associative.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weylcps/jet.hpp"

namespace weylcps {

enum class Func : std::uint8_t { kSin, kCos, kExp, kLog, kSqrt, kTanh };

const char* func_name(Func f);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind : std::uint8_t { kNumber, kPi, kVariable, kNegate, kBinary, kCall };

  Kind kind;
  double number = 0.0;   // kNumber
  std::string name;      // kVariable
  char op = 0;           // kBinary: one of + - * / ^
  Func fn = Func::kSin;  // kCall
  ExprPtr a, b;

  static ExprPtr make_number(double v);
  static ExprPtr make_pi();
  static ExprPtr make_variable(std::string name);
  static ExprPtr make_negate(ExprPtr a);
  static ExprPtr make_binary(char op, ExprPtr a, ExprPtr b);
  static ExprPtr make_call(Func fn, ExprPtr a);
};

// Errors: SyntaxError (with position), UnknownIdentifier (unknown function
// name), ArityError (function applied to a wrong argument count).
ExprPtr parse(std::string_view source);

// Fully parenthesized round-trippable form: parse(print(e)) is structurally
// identical to e.
std::string print(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

// Names of all variables referenced by the expression (sorted, deduplicated).
std::vector<std::string> free_variables(const Expr& e);

// Linear instruction list evaluating one Expr. Immutable after construction;
// evaluation is side-effect free, deterministic, and safe to run concurrently.
class Tape {
 public:
  enum class Op : std::uint8_t {
    kConst,
    kVar,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kNeg,
    kPow,
    kSin,
    kCos,
    kExp,
    kLog,
    kSqrt,
    kTanh
  };

  struct Instr {
    Op op;
    std::int32_t a = -1;
    std::int32_t b = -1;
    double literal = 0.0;
  };

  int arity() const { return arity_; }
  const std::vector<Instr>& code() const { return code_; }

  double eval_value(std::span<const double> inputs) const;
  Jet2 eval_jet(std::span<const Jet2> inputs) const;

  // Jet evaluation at a raw coordinate tuple (inputs promoted to variables).
  Jet2 eval_jet_at(std::span<const double> coords) const;

 private:
  friend Tape compile(const Expr&, std::span<const std::string>);
  int arity_ = 0;
  std::vector<Instr> code_;
};

// Throws UnknownIdentifier if the expression references a variable that is
// not among chart_vars.
Tape compile(const Expr& e, std::span<const std::string> chart_vars);
Tape compile(std::string_view source, std::span<const std::string> chart_vars);

}  // namespace weylcps
