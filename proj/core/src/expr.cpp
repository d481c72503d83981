#include "weylcps/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <set>

namespace weylcps {

const char* func_name(Func f) {
  switch (f) {
    case Func::kSin: return "sin";
    case Func::kCos: return "cos";
    case Func::kExp: return "exp";
    case Func::kLog: return "log";
    case Func::kSqrt: return "sqrt";
    case Func::kTanh: return "tanh";
  }
  return "?";
}

ExprPtr Expr::make_number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kNumber;
  e->number = v;
  return e;
}

ExprPtr Expr::make_pi() {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kPi;
  return e;
}

ExprPtr Expr::make_variable(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kVariable;
  e->name = std::move(name);
  return e;
}

ExprPtr Expr::make_negate(ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kNegate;
  e->a = std::move(a);
  return e;
}

ExprPtr Expr::make_binary(char op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kBinary;
  e->op = op;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr Expr::make_call(Func fn, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kCall;
  e->fn = fn;
  e->a = std::move(a);
  return e;
}

namespace {

struct Token {
  enum class Kind { kNumber, kIdent, kOp, kLParen, kRParen, kComma, kEnd };
  Kind kind;
  double number = 0.0;
  std::string ident;
  char op = 0;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    tok_.pos = pos_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::Kind::kEnd;
      return;
    }
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.data() + pos_;
      const char* end = src_.data() + src_.size();
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc()) throw SyntaxError(pos_, "malformed number");
      tok_.kind = Token::Kind::kNumber;
      tok_.number = value;
      pos_ += static_cast<std::size_t>(ptr - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Kind::kIdent;
      tok_.ident = std::string(src_.substr(start, pos_ - start));
      return;
    }
    switch (c) {
      case '+': case '-': case '*': case '/': case '^':
        tok_.kind = Token::Kind::kOp;
        tok_.op = c;
        ++pos_;
        return;
      case '(':
        tok_.kind = Token::Kind::kLParen;
        ++pos_;
        return;
      case ')':
        tok_.kind = Token::Kind::kRParen;
        ++pos_;
        return;
      case ',':
        tok_.kind = Token::Kind::kComma;
        ++pos_;
        return;
      default:
        throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

std::optional<Func> lookup_func(const std::string& name) {
  static const std::map<std::string, Func> kFuncs = {
      {"sin", Func::kSin}, {"cos", Func::kCos},   {"exp", Func::kExp},
      {"log", Func::kLog}, {"sqrt", Func::kSqrt}, {"tanh", Func::kTanh}};
  auto it = kFuncs.find(name);
  if (it == kFuncs.end()) return std::nullopt;
  return it->second;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  ExprPtr run() {
    ExprPtr e = expr();
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::kEnd)
      throw SyntaxError(t.pos, "expected operator or end of input");
    return e;
  }

 private:
  bool peek_op(char op) const {
    const Token& t = lex_.peek();
    return t.kind == Token::Kind::kOp && t.op == op;
  }

  ExprPtr expr() {
    ExprPtr e = term();
    while (peek_op('+') || peek_op('-')) {
      char op = lex_.take().op;
      e = Expr::make_binary(op, std::move(e), term());
    }
    return e;
  }

  ExprPtr term() {
    ExprPtr e = unary();
    while (peek_op('*') || peek_op('/')) {
      char op = lex_.take().op;
      e = Expr::make_binary(op, std::move(e), unary());
    }
    return e;
  }

  ExprPtr unary() {
    if (peek_op('-')) {
      lex_.take();
      return Expr::make_negate(unary());
    }
    if (peek_op('+')) {
      lex_.take();
      return unary();
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr e = atom();
    while (peek_op('^')) {
      lex_.take();
      e = Expr::make_binary('^', std::move(e), exponent());
    }
    return e;
  }

  // The exponent of '^' must be a numeric literal, optionally signed.
  ExprPtr exponent() {
    double sign = 1.0;
    while (peek_op('-') || peek_op('+')) {
      if (lex_.take().op == '-') sign = -sign;
    }
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::kNumber)
      throw SyntaxError(t.pos, "exponent must be a numeric literal");
    return Expr::make_number(sign * lex_.take().number);
  }

  ExprPtr atom() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::kNumber:
        return Expr::make_number(t.number);
      case Token::Kind::kLParen: {
        ExprPtr e = expr();
        expect_rparen();
        return e;
      }
      case Token::Kind::kIdent: {
        if (t.ident == "pi") return Expr::make_pi();
        if (lex_.peek().kind == Token::Kind::kLParen) {
          auto fn = lookup_func(t.ident);
          if (!fn) throw UnknownIdentifier("unknown function '" + t.ident + "'");
          lex_.take();  // '('
          ExprPtr arg = expr();
          int extra_args = 0;
          while (lex_.peek().kind == Token::Kind::kComma) {
            lex_.take();
            expr();
            ++extra_args;
          }
          expect_rparen();
          if (extra_args != 0)
            throw ArityError("function '" + t.ident + "' takes 1 argument, got " +
                             std::to_string(1 + extra_args));
          return Expr::make_call(*fn, std::move(arg));
        }
        return Expr::make_variable(t.ident);
      }
      case Token::Kind::kOp:
        throw SyntaxError(t.pos, std::string("unexpected operator '") + t.op +
                                     "', expected a value");
      case Token::Kind::kRParen:
        throw SyntaxError(t.pos, "unexpected ')', expected a value");
      case Token::Kind::kComma:
        throw SyntaxError(t.pos, "unexpected ',', expected a value");
      case Token::Kind::kEnd:
        throw SyntaxError(t.pos, "unexpected end of input, expected a value");
    }
    throw SyntaxError(t.pos, "unexpected token");
  }

  void expect_rparen() {
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::kRParen) throw SyntaxError(t.pos, "expected ')'");
    lex_.take();
  }

  Lexer lex_;
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void print_rec(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::kNumber:
      out += format_number(e.number);
      return;
    case Expr::Kind::kPi:
      out += "pi";
      return;
    case Expr::Kind::kVariable:
      out += e.name;
      return;
    case Expr::Kind::kNegate:
      out += "(-";
      print_rec(*e.a, out);
      out += ')';
      return;
    case Expr::Kind::kBinary:
      out += '(';
      print_rec(*e.a, out);
      out += e.op;
      print_rec(*e.b, out);
      out += ')';
      return;
    case Expr::Kind::kCall:
      out += func_name(e.fn);
      out += '(';
      print_rec(*e.a, out);
      out += ')';
      return;
  }
}

void collect_vars(const Expr& e, std::set<std::string>& out) {
  switch (e.kind) {
    case Expr::Kind::kVariable:
      out.insert(e.name);
      return;
    case Expr::Kind::kNegate:
    case Expr::Kind::kCall:
      collect_vars(*e.a, out);
      return;
    case Expr::Kind::kBinary:
      collect_vars(*e.a, out);
      collect_vars(*e.b, out);
      return;
    default:
      return;
  }
}

}  // namespace

ExprPtr parse(std::string_view source) {
  if (source.empty()) throw SyntaxError(0, "empty expression");
  return Parser(source).run();
}

std::string print(const Expr& e) {
  std::string out;
  print_rec(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::kNumber:
      return a.number == b.number;
    case Expr::Kind::kPi:
      return true;
    case Expr::Kind::kVariable:
      return a.name == b.name;
    case Expr::Kind::kNegate:
      return structurally_equal(*a.a, *b.a);
    case Expr::Kind::kBinary:
      return a.op == b.op && structurally_equal(*a.a, *b.a) && structurally_equal(*a.b, *b.b);
    case Expr::Kind::kCall:
      return a.fn == b.fn && structurally_equal(*a.a, *b.a);
  }
  return false;
}

std::vector<std::string> free_variables(const Expr& e) {
  std::set<std::string> vars;
  collect_vars(e, vars);
  return {vars.begin(), vars.end()};
}

namespace {

struct Compiler {
  const std::vector<std::string> vars;
  std::vector<Tape::Instr> code;

  std::int32_t emit(Tape::Instr in) {
    code.push_back(in);
    return static_cast<std::int32_t>(code.size() - 1);
  }

  std::int32_t visit(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::kNumber:
        return emit({Tape::Op::kConst, -1, -1, e.number});
      case Expr::Kind::kPi:
        return emit({Tape::Op::kConst, -1, -1, std::numbers::pi_v<double>});
      case Expr::Kind::kVariable: {
        for (std::size_t i = 0; i < vars.size(); ++i) {
          if (vars[i] == e.name)
            return emit({Tape::Op::kVar, static_cast<std::int32_t>(i), -1, 0.0});
        }
        throw UnknownIdentifier("variable '" + e.name + "' is not a chart coordinate");
      }
      case Expr::Kind::kNegate:
        return emit({Tape::Op::kNeg, visit(*e.a), -1, 0.0});
      case Expr::Kind::kBinary: {
        if (e.op == '^') {
          // Exponent is a literal by grammar; keep it in the instruction.
          return emit({Tape::Op::kPow, visit(*e.a), -1, e.b->number});
        }
        std::int32_t a = visit(*e.a);
        std::int32_t b = visit(*e.b);
        Tape::Op op;
        switch (e.op) {
          case '+': op = Tape::Op::kAdd; break;
          case '-': op = Tape::Op::kSub; break;
          case '*': op = Tape::Op::kMul; break;
          case '/': op = Tape::Op::kDiv; break;
          default: throw InternalError("bad binary op");
        }
        return emit({op, a, b, 0.0});
      }
      case Expr::Kind::kCall: {
        std::int32_t a = visit(*e.a);
        Tape::Op op;
        switch (e.fn) {
          case Func::kSin: op = Tape::Op::kSin; break;
          case Func::kCos: op = Tape::Op::kCos; break;
          case Func::kExp: op = Tape::Op::kExp; break;
          case Func::kLog: op = Tape::Op::kLog; break;
          case Func::kSqrt: op = Tape::Op::kSqrt; break;
          case Func::kTanh: op = Tape::Op::kTanh; break;
          default: throw InternalError("bad function");
        }
        return emit({op, a, -1, 0.0});
      }
    }
    throw InternalError("bad expression node");
  }
};

}  // namespace

Tape compile(const Expr& e, std::span<const std::string> chart_vars) {
  Compiler c{{chart_vars.begin(), chart_vars.end()}, {}};
  c.visit(e);
  Tape t;
  t.arity_ = static_cast<int>(chart_vars.size());
  t.code_ = std::move(c.code);
  return t;
}

Tape compile(std::string_view source, std::span<const std::string> chart_vars) {
  return compile(*parse(source), chart_vars);
}

double Tape::eval_value(std::span<const double> inputs) const {
  std::vector<double> slot(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& in = code_[i];
    switch (in.op) {
      case Op::kConst: slot[i] = in.literal; break;
      case Op::kVar: slot[i] = inputs[static_cast<std::size_t>(in.a)]; break;
      case Op::kAdd: slot[i] = slot[in.a] + slot[in.b]; break;
      case Op::kSub: slot[i] = slot[in.a] - slot[in.b]; break;
      case Op::kMul: slot[i] = slot[in.a] * slot[in.b]; break;
      case Op::kDiv: slot[i] = scalar_ops::div_checked(slot[in.a], slot[in.b]); break;
      case Op::kNeg: slot[i] = -slot[in.a]; break;
      case Op::kPow: slot[i] = scalar_ops::pow_checked(slot[in.a], in.literal); break;
      case Op::kSin: slot[i] = std::sin(slot[in.a]); break;
      case Op::kCos: slot[i] = std::cos(slot[in.a]); break;
      case Op::kExp: slot[i] = std::exp(slot[in.a]); break;
      case Op::kLog: slot[i] = scalar_ops::log_checked(slot[in.a]); break;
      case Op::kSqrt: slot[i] = scalar_ops::sqrt_checked(slot[in.a]); break;
      case Op::kTanh: slot[i] = std::tanh(slot[in.a]); break;
    }
  }
  return slot.back();
}

Jet2 Tape::eval_jet(std::span<const Jet2> inputs) const {
  const int n = inputs.empty() ? arity_ : inputs[0].dim();
  std::vector<Jet2> slot(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& in = code_[i];
    switch (in.op) {
      case Op::kConst: slot[i] = Jet2::constant(n, in.literal); break;
      case Op::kVar: slot[i] = inputs[static_cast<std::size_t>(in.a)]; break;
      case Op::kAdd: slot[i] = slot[in.a] + slot[in.b]; break;
      case Op::kSub: slot[i] = slot[in.a] - slot[in.b]; break;
      case Op::kMul: slot[i] = slot[in.a] * slot[in.b]; break;
      case Op::kDiv: slot[i] = slot[in.a] / slot[in.b]; break;
      case Op::kNeg: slot[i] = -slot[in.a]; break;
      case Op::kPow: slot[i] = pow(slot[in.a], in.literal); break;
      case Op::kSin: slot[i] = sin(slot[in.a]); break;
      case Op::kCos: slot[i] = cos(slot[in.a]); break;
      case Op::kExp: slot[i] = exp(slot[in.a]); break;
      case Op::kLog: slot[i] = log(slot[in.a]); break;
      case Op::kSqrt: slot[i] = sqrt(slot[in.a]); break;
      case Op::kTanh: slot[i] = tanh(slot[in.a]); break;
    }
  }
  return slot.back();
}

Jet2 Tape::eval_jet_at(std::span<const double> coords) const {
  const int n = static_cast<int>(coords.size());
  std::vector<Jet2> inputs;
  inputs.reserve(coords.size());
  for (int i = 0; i < n; ++i) inputs.push_back(Jet2::variable(n, i, coords[i]));
  return eval_jet(inputs);
}

}  // namespace weylcps
