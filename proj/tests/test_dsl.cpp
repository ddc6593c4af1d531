#include <doctest.h>

#include <sstream>

#include "metametrics/dsl.hpp"
#include "metametrics/error.hpp"
#include "metametrics/rng.hpp"

using namespace mm;

namespace {

ExprPtr random_expr(Rng& rng, int depth) {
  static const char* stats[] = {"PTS", "FGA", "TPM", "x_1", "eFG%"};
  double roll = rng.uniform();
  if (depth <= 0 || roll < 0.35) {
    if (rng.uniform() < 0.5) return Expr::make_stat(stats[rng.below(5)]);
    double v = rng.uniform() < 0.3 ? static_cast<double>(rng.below(1000))
                                   : rng.uniform() * 50.0;
    return Expr::make_number(v);
  }
  static const char ops[] = {'+', '-', '*', '/'};
  return Expr::make_binary(ops[rng.below(4)], random_expr(rng, depth - 1),
                           random_expr(rng, depth - 1));
}

double eval_tree(const Expr& e,
                 const std::unordered_map<std::string, double>& stats) {
  switch (e.tag) {
    case Expr::Tag::number: return e.number;
    case Expr::Tag::stat: return stats.at(e.stat);
    case Expr::Tag::binary: {
      double l = eval_tree(*e.lhs, stats);
      double r = eval_tree(*e.rhs, stats);
      switch (e.op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        default: return l / r;
      }
    }
  }
  return 0.0;
}

}  // namespace

TEST_SUITE_BEGIN("dsl");

TEST_CASE("kind defaults to total and parses explicitly") {
  auto d1 = parse_metric("PTS = PTS");
  CHECK(d1.name == "PTS");
  CHECK(d1.kind == MetricKind::total);
  CHECK_FALSE(d1.attempts_stat.has_value());

  auto d2 = parse_metric("PPM rate = PTS / MIN");
  CHECK(d2.kind == MetricKind::rate);

  auto d3 = parse_metric("FG% percentage attempts=FGA = FG / FGA");
  CHECK(d3.kind == MetricKind::percentage);
  CHECK(d3.attempts_stat.value() == "FGA");
}

TEST_CASE("metric names may start with digits or punctuation") {
  auto d = parse_metric("3P% percentage attempts=TPA = TPM / TPA");
  CHECK(d.name == "3P%");
}

TEST_CASE("percentage without attempts raises MissingAttempts") {
  CHECK_THROWS_WITH_AS(parse_metric("FG% percentage = FG / FGA"),
                       "percentage metric 'FG%' needs an attempts= clause",
                       Error);
  try {
    parse_metric("FG% percentage = FG / FGA");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_attempts);
    CHECK(std::string(to_string(e.code())) == "MissingAttempts");
  }
}

TEST_CASE("attempts on a non-percentage metric is rejected") {
  try {
    parse_metric("PTS total attempts=FGA = PTS");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    CHECK(std::string(e.what()).find("attempts=") != std::string::npos);
  }
}

TEST_CASE("precedence and associativity build the expected tree") {
  auto d = parse_metric("X = A + B * C");
  const Expr& e = *d.expression;
  REQUIRE(e.tag == Expr::Tag::binary);
  CHECK(e.op == '+');
  CHECK(e.lhs->stat == "A");
  CHECK(e.rhs->op == '*');

  auto d2 = parse_metric("X = A - B - C");
  CHECK(d2.expression->op == '-');
  CHECK(d2.expression->lhs->op == '-');  // left associative
  CHECK(d2.expression->rhs->stat == "C");

  auto d3 = parse_metric("X = (A + B) * C");
  CHECK(d3.expression->op == '*');
  CHECK(d3.expression->lhs->op == '+');
}

TEST_CASE("printing preserves grouping that matters") {
  auto check_rt = [](const char* src) {
    auto def = parse_metric(src);
    auto back = parse_metric(to_string(def));
    CHECK(equal(*def.expression, *back.expression));
    CHECK(back.kind == def.kind);
    CHECK(back.attempts_stat == def.attempts_stat);
  };
  check_rt("X = A - (B - C)");
  check_rt("X = A / (B / C)");
  check_rt("X = (A + B) * (C - 2)");
  check_rt("X = A / B / C");
  check_rt("X = 2.5e-1 * PTS + 0.5");
  check_rt("FG% percentage attempts=FGA = (FG + 0.5 * TPM) / FGA");

  // equal-precedence right child keeps its parentheses, left does not
  CHECK(to_string(*parse_metric("X = A - (B - C)").expression) == "A - (B - C)");
  CHECK(to_string(*parse_metric("X = (A - B) - C").expression) == "A - B - C");
}

TEST_CASE("round trip holds on random trees") {
  Rng rng(20240817);
  for (int i = 0; i < 300; ++i) {
    MetricDefinition def;
    def.name = "m";
    def.expression = random_expr(rng, 4);
    auto back = parse_metric(to_string(def));
    CHECK(equal(*def.expression, *back.expression));
  }
}

TEST_CASE("number literals") {
  CHECK(parse_metric("X = 42").expression->number == 42.0);
  CHECK(parse_metric("X = 0.125").expression->number == 0.125);
  CHECK(parse_metric("X = 1e3").expression->number == 1000.0);
  CHECK(parse_metric("X = 2.5E-1").expression->number == 0.25);
  CHECK_THROWS_AS(parse_metric("X = 1."), Error);
  CHECK_THROWS_AS(parse_metric("X = 1e"), Error);
  CHECK_THROWS_AS(parse_metric("X = 1e+"), Error);
}

TEST_CASE("errors carry line and column positions") {
  try {
    parse_metric("X = A + ", 7);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    CHECK(e.code() == ErrorCode::parse_error);
  }
  CHECK_THROWS_AS(parse_metric("X = (A + B"), Error);
  CHECK_THROWS_AS(parse_metric("X = A ? B"), Error);
  CHECK_THROWS_AS(parse_metric(""), Error);
  CHECK_THROWS_AS(parse_metric("X"), Error);
  CHECK_THROWS_AS(parse_metric("X = A B"), Error);
}

TEST_CASE("deeply nested expressions hit the recursion guard") {
  std::string src = "X = ";
  for (int i = 0; i < 300; ++i) src += '(';
  src += 'A';
  for (int i = 0; i < 300; ++i) src += ')';
  try {
    parse_metric(src);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    CHECK(std::string(e.what()).find("too deeply") != std::string::npos);
  }
}

TEST_CASE("definition files skip comments and blanks, reject duplicates") {
  std::istringstream in(
      "# leading comment\n"
      "\n"
      "PTS = PTS  # trailing comment\n"
      "PPM rate = PTS / MIN\n");
  auto defs = parse_metric_file(in);
  REQUIRE(defs.size() == 2);
  CHECK(defs[0].name == "PTS");
  CHECK(defs[1].name == "PPM");

  std::istringstream dup("A = X\nB = Y\nA = Z\n");
  try {
    parse_metric_file(dup);
    FAIL("expected DuplicateMetric");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::duplicate_metric);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  std::istringstream empty("# nothing here\n\n");
  try {
    parse_metric_file(empty);
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_input);
  }
}

TEST_CASE("referenced stats come back in first-use order") {
  auto d = parse_metric("X = (B + A) / B + C");
  auto stats = referenced_stats(*d.expression);
  REQUIRE(stats.size() == 3);
  CHECK(stats[0] == "B");
  CHECK(stats[1] == "A");
  CHECK(stats[2] == "C");
}

TEST_CASE("compiled evaluation matches the tree walk") {
  std::unordered_map<std::string, double> totals = {
      {"PTS", 820.0}, {"FGA", 300.0}, {"TPM", 55.0}, {"x_1", 3.25}, {"eFG%", 0.5}};
  std::unordered_map<std::string, int> idx;
  std::vector<double> dense;
  for (const auto& [k, v] : totals) {
    idx.emplace(k, static_cast<int>(dense.size()));
    dense.push_back(v);
  }
  Rng rng(99);
  for (int i = 0; i < 300; ++i) {
    ExprPtr e = random_expr(rng, 4);
    auto compiled = CompiledExpr::compile(*e, idx);
    double direct = eval_tree(*e, totals);
    auto got = compiled.evaluate(dense.data());
    if (std::isnan(direct)) {
      CHECK(std::isnan(got.value));
    } else if (std::isinf(direct)) {
      CHECK(got.value == direct);
    } else {
      CHECK(got.value == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("compiled evaluation flags division by zero") {
  std::unordered_map<std::string, int> idx = {{"A", 0}, {"B", 1}};
  double totals[] = {5.0, 0.0};
  auto d = parse_metric("X = A / B");
  auto c = CompiledExpr::compile(*d.expression, idx);
  auto v = c.evaluate(totals);
  CHECK(v.divide_by_zero);
  double totals2[] = {5.0, 2.0};
  CHECK_FALSE(c.evaluate(totals2).divide_by_zero);
  CHECK(c.evaluate(totals2).value == 2.5);
}

TEST_CASE("compiling an unknown stat raises UnknownStat") {
  std::unordered_map<std::string, int> idx = {{"A", 0}};
  auto d = parse_metric("X = A + NOPE");
  try {
    CompiledExpr::compile(*d.expression, idx);
    FAIL("expected UnknownStat");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_stat);
    CHECK(std::string(e.what()).find("NOPE") != std::string::npos);
  }
}

TEST_SUITE_END();
