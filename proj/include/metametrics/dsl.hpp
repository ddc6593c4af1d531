#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mm {

enum class MetricKind { total, rate, percentage };

const char* to_string(MetricKind kind);

// Arithmetic over season-summed stats.
struct Expr {
  enum class Tag { number, stat, binary };

  Tag tag = Tag::number;
  double number = 0.0;     // tag == number
  std::string stat;        // tag == stat
  char op = 0;             // tag == binary: one of + - * /
  std::shared_ptr<const Expr> lhs, rhs;

  static std::shared_ptr<const Expr> make_number(double value);
  static std::shared_ptr<const Expr> make_stat(std::string name);
  static std::shared_ptr<const Expr> make_binary(char op,
                                                 std::shared_ptr<const Expr> lhs,
                                                 std::shared_ptr<const Expr> rhs);
};

using ExprPtr = std::shared_ptr<const Expr>;

struct MetricDefinition {
  std::string name;
  MetricKind kind = MetricKind::total;
  std::optional<std::string> attempts_stat;  // percentage metrics only
  ExprPtr expression;
};

// Parses one definition of the form
//
//   name [kind] [attempts=STAT] = expr
//   kind   := "rate" | "total" | "percentage"
//   expr   := term  (("+" | "-") term)*
//   term   := factor (("*" | "/") factor)*
//   factor := number | stat | "(" expr ")"
//
// Stats are identifiers ([A-Za-z_][A-Za-z0-9_%]*); numbers are unsigned
// decimal literals with optional fraction and exponent. The kind defaults to
// "total" when omitted; attempts= is only accepted for percentage metrics.
// Errors carry 1-based line:column positions.
MetricDefinition parse_metric(std::string_view source, int line = 1);

// Parses a definitions file: one definition per line, "#" starts a comment,
// blank lines are skipped. Duplicate metric names are an error.
std::vector<MetricDefinition> parse_metric_file(std::istream& in);
std::vector<MetricDefinition> parse_metric_file(const std::string& path);

// Canonical text form; parse(to_string(e)) reproduces the same tree.
std::string to_string(const Expr& expr);
std::string to_string(const MetricDefinition& def);

bool equal(const Expr& a, const Expr& b);

// Stat names referenced by the expression, in first-use order.
std::vector<std::string> referenced_stats(const Expr& expr);

// Expression flattened to postfix over dense stat indices, for evaluation in
// inner loops without tree walks or name lookups.
class CompiledExpr {
 public:
  struct Step {
    enum class Op { push_number, push_stat, add, sub, mul, div };
    Op op;
    double number = 0.0;
    int stat = -1;
  };

  struct Value {
    double value = 0.0;
    bool divide_by_zero = false;
  };

  // stat_index maps stat name to position in the totals array handed to
  // evaluate(); unknown stats raise UnknownStat.
  static CompiledExpr compile(const Expr& expr,
                              const std::unordered_map<std::string, int>& stat_index);

  Value evaluate(const double* totals) const;

  int max_stack() const { return max_stack_; }
  const std::vector<Step>& steps() const { return steps_; }

 private:
  std::vector<Step> steps_;
  int max_stack_ = 0;
};

}  // namespace mm
