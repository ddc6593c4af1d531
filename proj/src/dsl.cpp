#include "metametrics/dsl.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <utility>

#include "metametrics/error.hpp"

namespace mm {

namespace {

constexpr int kMaxDepth = 200;  // parser recursion guard

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '%';
}

int precedence(char op) { return (op == '+' || op == '-') ? 1 : 2; }

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Recursive descent over the expression part of a definition.
class ExprParser {
 public:
  ExprParser(std::string_view src, std::size_t base, int line)
      : src_(src), pos_(0), base_(base), line_(line) {}

  ExprPtr parse() {
    ExprPtr e = parse_expr(0);
    skip_ws();
    if (pos_ != src_.size()) error(pos_, "unexpected trailing characters");
    return e;
  }

 private:
  ExprPtr parse_expr(int depth) {
    ExprPtr lhs = parse_term(depth);
    for (;;) {
      skip_ws();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
        char op = src_[pos_++];
        ExprPtr rhs = parse_term(depth);
        lhs = Expr::make_binary(op, std::move(lhs), std::move(rhs));
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_term(int depth) {
    ExprPtr lhs = parse_factor(depth);
    for (;;) {
      skip_ws();
      if (pos_ < src_.size() && (src_[pos_] == '*' || src_[pos_] == '/')) {
        char op = src_[pos_++];
        ExprPtr rhs = parse_factor(depth);
        lhs = Expr::make_binary(op, std::move(lhs), std::move(rhs));
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_factor(int depth) {
    if (depth > kMaxDepth) error(pos_, "expression nested too deeply");
    skip_ws();
    if (pos_ >= src_.size()) error(pos_, "expected number, stat, or '('");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_expr(depth + 1);
      skip_ws();
      if (pos_ >= src_.size() || src_[pos_] != ')') error(pos_, "expected ')'");
      ++pos_;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
      return Expr::make_stat(std::string(src_.substr(start, pos_ - start)));
    }
    error(pos_, std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        error(pos_, "expected digit after decimal point");
      }
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        error(pos_, "expected digit in exponent");
      }
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    std::string_view text = src_.substr(start, pos_ - start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      error(start, "invalid number literal");
    }
    return Expr::make_number(value);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  [[noreturn]] void error(std::size_t at, const std::string& msg) {
    std::ostringstream os;
    os << "line " << line_ << ", column " << (base_ + at + 1) << ": " << msg;
    fail(ErrorCode::parse_error, os.str());
  }

  std::string_view src_;
  std::size_t pos_;
  std::size_t base_;  // offset of src_ within the full definition line
  int line_;
};

[[noreturn]] void header_error(int line, std::size_t col, const std::string& msg) {
  std::ostringstream os;
  os << "line " << line << ", column " << (col + 1) << ": " << msg;
  fail(ErrorCode::parse_error, os.str());
}

}  // namespace

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::total: return "total";
    case MetricKind::rate: return "rate";
    case MetricKind::percentage: return "percentage";
  }
  return "total";
}

ExprPtr Expr::make_number(double value) {
  auto e = std::make_shared<Expr>();
  e->tag = Tag::number;
  e->number = value;
  return e;
}

ExprPtr Expr::make_stat(std::string name) {
  auto e = std::make_shared<Expr>();
  e->tag = Tag::stat;
  e->stat = std::move(name);
  return e;
}

ExprPtr Expr::make_binary(char op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->tag = Tag::binary;
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

MetricDefinition parse_metric(std::string_view source, int line) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < source.size() && std::isspace(static_cast<unsigned char>(source[pos]))) ++pos;
  };

  skip_ws();
  if (pos >= source.size()) header_error(line, pos, "empty metric definition");

  // Metric name: any run of non-space characters other than '='. Names need
  // not be identifiers ("3P%" is fine); only stats inside expressions do.
  std::size_t name_start = pos;
  while (pos < source.size() && !std::isspace(static_cast<unsigned char>(source[pos])) &&
         source[pos] != '=') {
    ++pos;
  }
  MetricDefinition def;
  def.name = std::string(source.substr(name_start, pos - name_start));
  if (def.name.empty()) header_error(line, pos, "expected metric name");

  skip_ws();

  auto peek_word = [&]() -> std::string_view {
    std::size_t end = pos;
    while (end < source.size() && !std::isspace(static_cast<unsigned char>(source[end])) &&
           source[end] != '=') {
      ++end;
    }
    return source.substr(pos, end - pos);
  };

  std::string_view word = peek_word();
  if (word == "rate" || word == "total" || word == "percentage") {
    def.kind = word == "rate" ? MetricKind::rate
               : word == "total" ? MetricKind::total
                                 : MetricKind::percentage;
    pos += word.size();
    skip_ws();
    word = peek_word();
  }

  if (word == "attempts") {
    std::size_t attempts_col = pos;
    pos += word.size();
    skip_ws();
    if (pos >= source.size() || source[pos] != '=') {
      header_error(line, pos, "expected '=' after attempts");
    }
    ++pos;
    skip_ws();
    std::size_t stat_start = pos;
    if (pos >= source.size() || !ident_start(source[pos])) {
      header_error(line, pos, "expected stat name after attempts=");
    }
    while (pos < source.size() && ident_char(source[pos])) ++pos;
    def.attempts_stat = std::string(source.substr(stat_start, pos - stat_start));
    if (def.kind != MetricKind::percentage) {
      header_error(line, attempts_col,
                   "attempts= is only valid for percentage metrics");
    }
    skip_ws();
  }

  if (pos >= source.size() || source[pos] != '=') {
    header_error(line, pos, "expected '=' before expression");
  }
  ++pos;

  if (def.kind == MetricKind::percentage && !def.attempts_stat) {
    fail(ErrorCode::missing_attempts,
         "percentage metric '" + def.name + "' needs an attempts= clause");
  }

  ExprParser parser(source.substr(pos), pos, line);
  def.expression = parser.parse();
  return def;
}

std::vector<MetricDefinition> parse_metric_file(std::istream& in) {
  std::vector<MetricDefinition> defs;
  std::unordered_map<std::string, int> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    bool blank = true;
    for (char c : text) {
      if (!std::isspace(static_cast<unsigned char>(c))) {
        blank = false;
        break;
      }
    }
    if (blank) continue;
    MetricDefinition def = parse_metric(text, line);
    auto [it, inserted] = seen.emplace(def.name, line);
    if (!inserted) {
      std::ostringstream os;
      os << "metric '" << def.name << "' defined on line " << it->second
         << " and again on line " << line;
      fail(ErrorCode::duplicate_metric, os.str());
    }
    defs.push_back(std::move(def));
  }
  if (defs.empty()) {
    fail(ErrorCode::empty_input, "no metric definitions found");
  }
  return defs;
}

std::vector<MetricDefinition> parse_metric_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  return parse_metric_file(in);
}

namespace {

void print_expr(const Expr& e, int parent_prec, bool is_right, std::string& out) {
  switch (e.tag) {
    case Expr::Tag::number:
      out += format_number(e.number);
      return;
    case Expr::Tag::stat:
      out += e.stat;
      return;
    case Expr::Tag::binary: {
      int prec = precedence(e.op);
      // Parentheses preserve the tree exactly under the left-associative
      // grammar: a right operand at equal precedence must stay grouped.
      bool parens = prec < parent_prec || (prec == parent_prec && is_right);
      if (parens) out += '(';
      print_expr(*e.lhs, prec, false, out);
      out += ' ';
      out += e.op;
      out += ' ';
      print_expr(*e.rhs, prec, true, out);
      if (parens) out += ')';
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& expr) {
  std::string out;
  print_expr(expr, 0, false, out);
  return out;
}

std::string to_string(const MetricDefinition& def) {
  std::string out = def.name;
  out += ' ';
  out += to_string(def.kind);
  if (def.attempts_stat) {
    out += " attempts=";
    out += *def.attempts_stat;
  }
  out += " = ";
  out += to_string(*def.expression);
  return out;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.tag != b.tag) return false;
  switch (a.tag) {
    case Expr::Tag::number:
      return a.number == b.number;
    case Expr::Tag::stat:
      return a.stat == b.stat;
    case Expr::Tag::binary:
      return a.op == b.op && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
  return false;
}

namespace {

void collect_stats(const Expr& e, std::vector<std::string>& out) {
  switch (e.tag) {
    case Expr::Tag::number:
      return;
    case Expr::Tag::stat:
      for (const auto& s : out) {
        if (s == e.stat) return;
      }
      out.push_back(e.stat);
      return;
    case Expr::Tag::binary:
      collect_stats(*e.lhs, out);
      collect_stats(*e.rhs, out);
      return;
  }
}

}  // namespace

std::vector<std::string> referenced_stats(const Expr& expr) {
  std::vector<std::string> out;
  collect_stats(expr, out);
  return out;
}

CompiledExpr CompiledExpr::compile(const Expr& expr,
                                   const std::unordered_map<std::string, int>& stat_index) {
  CompiledExpr c;
  int depth = 0;
  // Post-order walk without recursion limits beyond the parser's own cap.
  struct Frame {
    const Expr* node;
    int stage;
  };
  std::vector<Frame> stack{{&expr, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const Expr& e = *f.node;
    if (e.tag == Expr::Tag::number) {
      c.steps_.push_back({Step::Op::push_number, e.number, -1});
      ++depth;
      c.max_stack_ = std::max(c.max_stack_, depth);
      stack.pop_back();
    } else if (e.tag == Expr::Tag::stat) {
      auto it = stat_index.find(e.stat);
      if (it == stat_index.end()) {
        fail(ErrorCode::unknown_stat, "stat '" + e.stat + "' not present in input");
      }
      c.steps_.push_back({Step::Op::push_stat, 0.0, it->second});
      ++depth;
      c.max_stack_ = std::max(c.max_stack_, depth);
      stack.pop_back();
    } else {
      if (f.stage == 0) {
        f.stage = 1;
        stack.push_back({e.lhs.get(), 0});
      } else if (f.stage == 1) {
        f.stage = 2;
        stack.push_back({e.rhs.get(), 0});
      } else {
        Step::Op op = e.op == '+'   ? Step::Op::add
                      : e.op == '-' ? Step::Op::sub
                      : e.op == '*' ? Step::Op::mul
                                    : Step::Op::div;
        c.steps_.push_back({op, 0.0, -1});
        --depth;
        stack.pop_back();
      }
    }
  }
  if (c.max_stack_ > kMaxDepth) {
    fail(ErrorCode::invalid_argument, "expression nested too deeply");
  }
  return c;
}

CompiledExpr::Value CompiledExpr::evaluate(const double* totals) const {
  double stack[kMaxDepth + 8];
  int top = 0;
  Value out;
  for (const Step& s : steps_) {
    switch (s.op) {
      case Step::Op::push_number:
        stack[top++] = s.number;
        break;
      case Step::Op::push_stat:
        stack[top++] = totals[s.stat];
        break;
      case Step::Op::add:
        --top;
        stack[top - 1] += stack[top];
        break;
      case Step::Op::sub:
        --top;
        stack[top - 1] -= stack[top];
        break;
      case Step::Op::mul:
        --top;
        stack[top - 1] *= stack[top];
        break;
      case Step::Op::div:
        --top;
        if (stack[top] == 0.0) out.divide_by_zero = true;
        stack[top - 1] /= stack[top];
        break;
    }
  }
  out.value = stack[0];
  return out;
}

}  // namespace mm
