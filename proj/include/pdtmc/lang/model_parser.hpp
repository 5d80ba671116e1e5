#pragma once

#include <set>
#include <string>
#include <string_view>

#include "pdtmc/lang/expr_parser.hpp"
#include "pdtmc/model/guarded_model.hpp"

namespace pdtmc::lang {

namespace detail {

class ModelParser {
 public:
  explicit ModelParser(std::string_view text) : ts_(tokenize(text)) {}

  GuardedModel parse() {
    ts_.expect_word("dtmc");
    bool have_module = false;
    while (!ts_.at_end()) {
      if (ts_.peek().is_word("const")) {
        parse_constant();
      } else if (ts_.peek().is_word("module")) {
        if (have_module) ts_.fail("only one module is supported");
        parse_module();
        have_module = true;
      } else if (ts_.peek().is_word("rewards")) {
        parse_rewards();
      } else {
        ts_.fail("expected 'const', 'module' or 'rewards'");
      }
    }
    if (!have_module) ts_.fail("missing module");
    resolve();
    return std::move(model_);
  }

 private:
  void declare(const Token& name) {
    if (!names_.insert(name.text).second) throw DuplicateName(name.span, "duplicate name '" + name.text + "'");
  }

  void parse_constant() {
    ts_.next();
    ConstantDecl c;
    c.type = ConstType::Int;
    if (ts_.accept_word("double")) {
      c.type = ConstType::Double;
    } else if (ts_.accept_word("int")) {
      c.type = ConstType::Int;
    } else if (ts_.accept_word("bool")) {
      c.type = ConstType::Bool;
    }
    const Token& name = ts_.expect_kind(TokenKind::Identifier, "constant name");
    declare(name);
    c.name = name.text;
    c.span = name.span;
    if (ts_.accept("=")) c.value = parse_literal();
    ts_.expect(";");
    model_.constants.push_back(std::move(c));
  }

  Expr parse_literal() {
    const Token& t = ts_.peek();
    if (t.is_word("true") || t.is_word("false")) {
      ts_.next();
      return Expr::make_bool(t.text == "true", t.span);
    }
    bool negative = false;
    if (ts_.peek().is("-")) {
      ts_.next();
      negative = true;
    }
    const Token& num = ts_.expect_kind(TokenKind::Number, "literal value");
    BigRational v = *parse_rational(num.text);
    return Expr::make_number(negative ? BigRational(-v) : v, num.span);
  }

  void parse_module() {
    ts_.next();
    model_.module_name = ts_.expect_kind(TokenKind::Identifier, "module name").text;
    while (!ts_.peek().is_word("endmodule")) {
      if (ts_.at_end()) ts_.fail("expected 'endmodule'");
      if (ts_.peek().is("[")) {
        parse_command();
      } else {
        parse_variable();
      }
    }
    ts_.next();
  }

  void parse_variable() {
    const Token& name = ts_.expect_kind(TokenKind::Identifier, "variable declaration or command");
    declare(name);
    VariableDecl v;
    v.name = name.text;
    v.span = name.span;
    ts_.expect(":");
    if (ts_.accept_word("bool")) {
      v.is_bool = true;
    } else {
      ts_.expect("[");
      v.low = parse_expr(ts_);
      ts_.expect("..");
      v.high = parse_expr(ts_);
      ts_.expect("]");
    }
    if (ts_.accept_word("init")) v.init = parse_expr(ts_);
    ts_.expect(";");
    model_.variables.push_back(std::move(v));
  }

  void parse_command() {
    Command cmd;
    cmd.span = ts_.expect("[").span;
    ts_.expect("]");
    cmd.guard = parse_expr(ts_);
    ts_.expect("->");
    if (starts_updates()) {
      Branch br;
      br.probability = Expr::make_number(BigRational(1), ts_.peek().span);
      br.updates = parse_updates();
      cmd.branches.push_back(std::move(br));
    } else {
      do {
        Branch br;
        br.probability = parse_expr(ts_);
        ts_.expect(":");
        br.updates = parse_updates();
        cmd.branches.push_back(std::move(br));
      } while (ts_.accept("+"));
    }
    ts_.expect(";");
    model_.commands.push_back(std::move(cmd));
  }

  bool starts_updates() const {
    if (ts_.peek().is_word("true")) return ts_.peek(1).is(";");
    return ts_.peek().is("(") && ts_.peek(1).kind == TokenKind::Identifier && ts_.peek(2).is("'");
  }

  std::vector<Update> parse_updates() {
    std::vector<Update> out;
    if (ts_.accept_word("true")) return out;
    do {
      ts_.expect("(");
      const Token& var = ts_.expect_kind(TokenKind::Identifier, "variable name");
      ts_.expect("'");
      ts_.expect("=");
      Update u{var.text, parse_expr(ts_)};
      ts_.expect(")");
      for (const auto& prev : out)
        if (prev.variable == u.variable) throw DuplicateName(var.span, "variable '" + var.text + "' updated twice");
      update_targets_.emplace_back(var.text, var.span);
      out.push_back(std::move(u));
    } while (ts_.accept("&"));
    return out;
  }

  void parse_rewards() {
    ts_.next();
    RewardDecl r;
    r.label = ts_.expect_kind(TokenKind::String, "reward label").text;
    while (!ts_.accept_word("endrewards")) {
      if (ts_.at_end()) ts_.fail("expected 'endrewards'");
      RewardItem item;
      item.guard = parse_expr(ts_);
      ts_.expect(":");
      item.value = parse_expr(ts_);
      ts_.expect(";");
      r.items.push_back(std::move(item));
    }
    model_.rewards.push_back(std::move(r));
  }

  void check_known(const Expr& e, bool allow_variables) const {
    std::vector<const Expr*> refs;
    e.collect_identifiers(refs);
    for (const auto* r : refs) {
      if (model_.find_constant(r->name)) continue;
      if (allow_variables && model_.find_variable(r->name)) continue;
      throw UnknownIdentifier(r->span, "unknown identifier '" + r->name + "'");
    }
  }

  void resolve() const {
    for (const auto& v : model_.variables) {
      if (!v.is_bool) {
        check_known(v.low, false);
        check_known(v.high, false);
      }
      if (v.init) check_known(*v.init, false);
    }
    for (const auto& [name, span] : update_targets_)
      if (!model_.find_variable(name)) throw UnknownIdentifier(span, "update of undeclared variable '" + name + "'");
    for (const auto& cmd : model_.commands) {
      check_known(cmd.guard, true);
      for (const auto& br : cmd.branches) {
        check_known(br.probability, true);
        for (const auto& u : br.updates) check_known(u.value, true);
      }
    }
    for (const auto& r : model_.rewards)
      for (const auto& item : r.items) {
        check_known(item.guard, true);
        check_known(item.value, true);
      }
  }

  TokenStream ts_;
  GuardedModel model_;
  std::set<std::string> names_;
  std::vector<std::pair<std::string, SourceSpan>> update_targets_;
};

}  // namespace detail

/// Parses the supported PRISM subset: a `dtmc` header, `const` declarations,
/// one module with variables and `[] guard -> p: updates + ...;` commands, and
/// `rewards "label" ... endrewards` blocks.
inline GuardedModel parse_model(std::string_view text) { return detail::ModelParser(text).parse(); }

/// Renders a model back into the accepted grammar; parsing the result gives
/// a structurally identical model.
inline std::string format_model(const GuardedModel& m) {
  std::string out = "dtmc\n\n";
  for (const auto& c : m.constants) {
    out += "const ";
    out += c.type == ConstType::Double ? "double " : c.type == ConstType::Int ? "int " : "bool ";
    out += c.name;
    if (c.value) out += " = " + to_string(*c.value);
    out += ";\n";
  }
  out += "\nmodule " + m.module_name + "\n";
  for (const auto& v : m.variables) {
    out += "  " + v.name + " : ";
    out += v.is_bool ? std::string("bool") : "[" + to_string(v.low) + ".." + to_string(v.high) + "]";
    if (v.init) out += " init " + to_string(*v.init);
    out += ";\n";
  }
  for (const auto& cmd : m.commands) {
    out += "  [] " + to_string(cmd.guard) + " -> ";
    for (std::size_t b = 0; b < cmd.branches.size(); ++b) {
      const auto& br = cmd.branches[b];
      if (b) out += " + ";
      out += to_string(br.probability) + ": ";
      if (br.updates.empty()) out += "true";
      for (std::size_t u = 0; u < br.updates.size(); ++u) {
        if (u) out += " & ";
        out += "(" + br.updates[u].variable + "'=" + to_string(br.updates[u].value) + ")";
      }
    }
    out += ";\n";
  }
  out += "endmodule\n";
  for (const auto& r : m.rewards) {
    out += "\nrewards \"" + r.label + "\"\n";
    for (const auto& item : r.items) out += "  " + to_string(item.guard) + " : " + to_string(item.value) + ";\n";
    out += "endrewards\n";
  }
  return out;
}

}  // namespace pdtmc::lang
