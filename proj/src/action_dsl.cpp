#include "actrec/action_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <istream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "actrec/error.hpp"

namespace actrec {

std::string_view to_string(RoleKind kind) {
  switch (kind) {
    case RoleKind::active:
      return "active";
    case RoleKind::passive:
      return "passive";
    case RoleKind::hand:
      return "hand";
  }
  return "?";
}

const RoleDecl* ActionDefinition::role(std::string_view role_name) const {
  for (const auto& r : roles) {
    if (r.name == role_name) return &r;
  }
  return nullptr;
}

const RoleDecl* ActionDefinition::role_of_kind(RoleKind kind) const {
  for (const auto& r : roles) {
    if (r.kind == kind) return &r;
  }
  return nullptr;
}

namespace {

enum class Tok { ident, number, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
};

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
    } else if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::ident, src.substr(i, j - i), line, col});
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::number, src.substr(i, j - i), line, col});
      advance(j - i);
    } else if (std::string_view("(){}:;,&!").find(c) != std::string_view::npos) {
      out.push_back({Tok::punct, std::string(1, c), line, col});
      advance(1);
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
  }
  out.push_back({Tok::end, "", line, col});
  return out;
}

struct Located {
  std::size_t line = 0;
  std::size_t column = 0;
};

/// Source positions kept beside the parsed definitions for error reporting.
struct DefinitionSite {
  Located name;
  std::vector<Located> sub_refs;  // after refs, then requires refs
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  std::vector<ActionDefinition> parse_file() {
    std::vector<ActionDefinition> defs;
    while (peek().kind != Tok::end) defs.push_back(parse_action());
    validate_references(defs);
    return defs;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const Token& t, const std::string& what) const { throw ParseError(what, t.line, t.column); }
  [[noreturn]] static void invalid(const Token& t, const std::string& what) {
    throw ValidationError("line " + std::to_string(t.line) + ", column " + std::to_string(t.column) + ": " + what);
  }

  bool at_punct(char c) const { return peek().kind == Tok::punct && peek().text[0] == c; }

  const Token& expect_punct(char c) {
    if (!at_punct(c)) fail(peek(), std::string("expected '") + c + "'" + found());
    return next();
  }

  const Token& expect_ident(std::string_view what) {
    if (peek().kind != Tok::ident) fail(peek(), "expected " + std::string(what) + found());
    return next();
  }

  std::string found() const {
    return peek().kind == Tok::end ? ", found end of input" : ", found '" + peek().text + "'";
  }

  ActionDefinition parse_action() {
    const Token& kw = expect_ident("'action'");
    if (kw.text != "action") fail(kw, "expected 'action', found '" + kw.text + "'");
    ActionDefinition def;
    const Token& name = expect_ident("action name");
    def.name = name.text;
    DefinitionSite site;
    site.name = {name.line, name.column};

    expect_punct('(');
    if (!at_punct(')')) {
      do {
        const Token& rn = expect_ident("role name");
        expect_punct(':');
        const Token& rk = expect_ident("role kind");
        RoleDecl role{rn.text, RoleKind::active};
        if (rk.text == "active") {
          role.kind = RoleKind::active;
        } else if (rk.text == "passive") {
          role.kind = RoleKind::passive;
        } else if (rk.text == "hand") {
          role.kind = RoleKind::hand;
        } else {
          fail(rk, "role kind must be active, passive or hand, found '" + rk.text + "'");
        }
        if (def.role(role.name)) invalid(rn, "duplicate role '" + role.name + "'");
        if (def.role_of_kind(role.kind)) {
          invalid(rn, "action '" + def.name + "' declares more than one " + std::string(to_string(role.kind)) + " role");
        }
        def.roles.push_back(role);
      } while (at_punct(',') && (next(), true));
    }
    expect_punct(')');
    expect_punct('{');

    std::vector<Located> after_sites, requires_sites;
    while (!at_punct('}')) {
      const Token& clause = expect_ident("clause keyword");
      expect_punct(':');
      if (clause.text == "static") {
        do {
          const Token& at = peek();
          ConstraintTerm term = parse_term(def);
          if (!is_static(term.id)) invalid(at, to_string(term.id) + " is not an ontology constraint (use a phase)");
          def.static_constraints.push_back(std::move(term));
        } while (at_punct(',') && (next(), true));
      } else if (clause.text == "after" || clause.text == "requires") {
        auto& list = clause.text == "after" ? def.after : def.requires_;
        auto& sites = clause.text == "after" ? after_sites : requires_sites;
        do {
          const Token& sub = expect_ident("action name");
          SubActionRef ref{sub.text, {}};
          expect_punct('(');
          if (!at_punct(')')) {
            do {
              const Token& arg = expect_ident("role name");
              if (!def.role(arg.text)) invalid(arg, "unknown role '" + arg.text + "'");
              ref.roles.push_back(arg.text);
            } while (at_punct(',') && (next(), true));
          }
          expect_punct(')');
          list.push_back(std::move(ref));
          sites.push_back({sub.line, sub.column});
        } while (at_punct(',') && (next(), true));
      } else if (clause.text == "phase") {
        def.phases.push_back(parse_phase(def));
      } else {
        fail(clause, "unknown clause '" + clause.text + "' (expected static, after, requires or phase)");
      }
      expect_punct(';');
    }
    const Token& close = expect_punct('}');

    if (def.composed()) {
      if (def.after.empty()) invalid(close, "action '" + def.name + "' has neither phases nor 'after' sub-actions");
      if (!def.requires_.empty()) invalid(close, "composed action '" + def.name + "' cannot use 'requires'");
    }
    site.sub_refs = after_sites;
    site.sub_refs.insert(site.sub_refs.end(), requires_sites.begin(), requires_sites.end());
    sites_.push_back(std::move(site));
    return def;
  }

  ConstraintTerm parse_term(const ActionDefinition& def) {
    const Token& name = expect_ident("constraint (C1..C12)");
    const auto id = constraint_from_string(name.text);
    if (!id) fail(name, "unknown constraint '" + name.text + "'");
    ConstraintTerm term;
    term.id = *id;
    expect_punct('(');
    std::vector<const Token*> args;
    if (!at_punct(')')) {
      do {
        args.push_back(&expect_ident("argument"));
      } while (at_punct(',') && (next(), true));
    }
    expect_punct(')');
    const auto& sig = signature(*id);
    if (args.size() != sig.size()) {
      invalid(name, to_string(*id) + " takes " + std::to_string(sig.size()) + " arguments, got " +
                        std::to_string(args.size()));
    }
    for (std::size_t k = 0; k < sig.size(); ++k) {
      const Token& arg = *args[k];
      if (sig[k] == OperandKind::affordance) {
        if (def.role(arg.text)) invalid(arg, "expected an affordance name, found role '" + arg.text + "'");
        term.affordance = arg.text;
        continue;
      }
      const RoleDecl* role = def.role(arg.text);
      if (!role) invalid(arg, "unknown role '" + arg.text + "'");
      const RoleKind want = sig[k] == OperandKind::active    ? RoleKind::active
                            : sig[k] == OperandKind::passive ? RoleKind::passive
                                                             : RoleKind::hand;
      if (role->kind != want) {
        invalid(arg, to_string(*id) + " argument " + std::to_string(k + 1) + " must be a " +
                         std::string(to_string(want)) + " role, '" + arg.text + "' is " +
                         std::string(to_string(role->kind)));
      }
      term.roles.push_back(arg.text);
    }
    return term;
  }

  Phase parse_phase(const ActionDefinition& def) {
    Phase phase;
    do {
      const Token& at = peek();
      if (peek().kind == Tok::ident && peek().text == "hold") {
        next();
        if (phase.hold_term) invalid(at, "a phase may contain only one hold(...)");
        expect_punct('(');
        ConstraintTerm term = parse_phase_term(def);
        if (at_punct(',')) {
          next();
          if (peek().kind != Tok::number) fail(peek(), "expected a frame count" + found());
          const Token& n = next();
          const int frames = std::stoi(n.text);
          if (frames < 1) invalid(n, "hold duration must be at least 1 frame");
          phase.hold_frames = frames;
        }
        expect_punct(')');
        phase.hold_term = phase.terms.size();
        phase.terms.push_back(std::move(term));
      } else {
        phase.terms.push_back(parse_phase_term(def));
      }
    } while (at_punct('&') && (next(), true));
    return phase;
  }

  ConstraintTerm parse_phase_term(const ActionDefinition& def) {
    bool negated = false;
    if (at_punct('!')) {
      next();
      negated = true;
    }
    const Token& at = peek();
    ConstraintTerm term = parse_term(def);
    if (is_static(term.id)) invalid(at, to_string(term.id) + " is an ontology constraint; list it under 'static'");
    if (negated && !is_per_frame(term.id)) invalid(at, to_string(term.id) + " cannot be negated");
    term.negated = negated;
    return term;
  }

  void validate_references(const std::vector<ActionDefinition>& defs) const {
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < defs.size(); ++k) {
      if (!index.emplace(defs[k].name, k).second) {
        throw ValidationError("line " + std::to_string(sites_[k].name.line) + ": duplicate action '" + defs[k].name +
                              "'");
      }
    }
    for (std::size_t k = 0; k < defs.size(); ++k) {
      const auto& def = defs[k];
      std::size_t r = 0;
      for (const auto* list : {&def.after, &def.requires_}) {
        for (const auto& ref : *list) {
          const Located where = sites_[k].sub_refs[r++];
          auto prefix = "line " + std::to_string(where.line) + ", column " + std::to_string(where.column) + ": ";
          auto it = index.find(ref.action);
          if (it == index.end()) throw ValidationError(prefix + "unknown action '" + ref.action + "'");
          const auto& sub = defs[it->second];
          if (sub.roles.size() != ref.roles.size()) {
            throw ValidationError(prefix + "'" + sub.name + "' takes " + std::to_string(sub.roles.size()) +
                                  " roles, got " + std::to_string(ref.roles.size()));
          }
          for (std::size_t a = 0; a < ref.roles.size(); ++a) {
            if (def.role(ref.roles[a])->kind != sub.roles[a].kind) {
              throw ValidationError(prefix + "role '" + ref.roles[a] + "' does not match " +
                                    std::string(to_string(sub.roles[a].kind)) + " role '" + sub.roles[a].name +
                                    "' of '" + sub.name + "'");
            }
          }
        }
      }
    }
    dependency_order(defs);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<DefinitionSite> sites_;
};

void dump_term(std::ostream& out, const ConstraintTerm& t) {
  if (t.negated) out << '!';
  out << to_string(t.id) << '(';
  std::size_t role = 0;
  const auto& sig = signature(t.id);
  for (std::size_t k = 0; k < sig.size(); ++k) {
    if (k) out << ", ";
    out << (sig[k] == OperandKind::affordance ? *t.affordance : t.roles[role++]);
  }
  out << ')';
}

void dump_refs(std::ostream& out, std::string_view keyword, const std::vector<SubActionRef>& refs) {
  for (const auto& ref : refs) {
    out << "  " << keyword << ": " << ref.action << '(';
    for (std::size_t k = 0; k < ref.roles.size(); ++k) out << (k ? ", " : "") << ref.roles[k];
    out << ");\n";
  }
}

const char* const kStandardLibrary = R"(# Shipped action library.
#
# static:   ontology gates checked once per candidate binding (C1..C4)
# after:    sub-action that must complete first; becomes a child instance
# requires: sub-action that must complete first; precondition only
# phase:    conjunction held for hold(...)'s duration (th_n when omitted)

action Pick(o: active, h: hand) {
  static: C1(o), C3(o, pick);
  phase: hold(C5(o, h));
  phase: hold(C9(o, h));
}

action Place(o: active, h: hand) {
  static: C1(o), C3(o, place);
  requires: Pick(o, h);
  phase: hold(C6(o, h)) & !C9(o, h) & C11(o);
}

action Pour(o: active, h: hand, p: passive) {
  static: C1(o), C2(p), C3(o, pour), C4(p, accept_pouring);
  after: Pick(o, h);
  phase: hold(C9(o, h)) & C12(o, p) & C10(o);
}

action wateringPlant(o: active, h: hand, p: passive) {
  after: Pour(o, h, p);
  after: Place(o, h);
}
)";

const char* const kCoMovementLibrary = R"(# Shipped action library, strict variant: Pour checks co-movement only.

action Pick(o: active, h: hand) {
  static: C1(o), C3(o, pick);
  phase: hold(C5(o, h));
  phase: hold(C9(o, h));
}

action Place(o: active, h: hand) {
  static: C1(o), C3(o, place);
  requires: Pick(o, h);
  phase: hold(C6(o, h)) & !C9(o, h) & C11(o);
}

action Pour(o: active, h: hand, p: passive) {
  static: C1(o), C2(p), C3(o, pour), C4(p, accept_pouring);
  after: Pick(o, h);
  phase: hold(C9(o, h));
}

action wateringPlant(o: active, h: hand, p: passive) {
  after: Pour(o, h, p);
  after: Place(o, h);
}
)";

}  // namespace

std::vector<ActionDefinition> parse_actions(std::istream& source) {
  std::string text((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  return parse_actions_string(text);
}

std::vector<ActionDefinition> parse_actions_string(const std::string& text) {
  Parser parser(tokenize(text));
  return parser.parse_file();
}

std::vector<ActionDefinition> load_actions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open action file '" + path + "'");
  return parse_actions(in);
}

std::string dump_actions(const std::vector<ActionDefinition>& definitions) {
  std::ostringstream out;
  bool first = true;
  for (const auto& def : definitions) {
    if (!first) out << '\n';
    first = false;
    out << "action " << def.name << '(';
    for (std::size_t k = 0; k < def.roles.size(); ++k) {
      out << (k ? ", " : "") << def.roles[k].name << ": " << to_string(def.roles[k].kind);
    }
    out << ") {\n";
    if (!def.static_constraints.empty()) {
      out << "  static: ";
      for (std::size_t k = 0; k < def.static_constraints.size(); ++k) {
        if (k) out << ", ";
        dump_term(out, def.static_constraints[k]);
      }
      out << ";\n";
    }
    dump_refs(out, "after", def.after);
    dump_refs(out, "requires", def.requires_);
    for (const auto& phase : def.phases) {
      out << "  phase: ";
      for (std::size_t k = 0; k < phase.terms.size(); ++k) {
        if (k) out << " & ";
        if (phase.hold_term && *phase.hold_term == k) {
          out << "hold(";
          dump_term(out, phase.terms[k]);
          if (phase.hold_frames) out << ", " << *phase.hold_frames;
          out << ')';
        } else {
          dump_term(out, phase.terms[k]);
        }
      }
      out << ";\n";
    }
    out << "}\n";
  }
  return out.str();
}

std::vector<std::size_t> dependency_order(const std::vector<ActionDefinition>& definitions) {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < definitions.size(); ++k) index.emplace(definitions[k].name, k);

  enum class Mark { none, visiting, done };
  std::vector<Mark> marks(definitions.size(), Mark::none);
  std::vector<std::size_t> order;
  std::vector<std::string> path;
  std::function<void(std::size_t)> visit = [&](std::size_t k) {
    if (marks[k] == Mark::done) return;
    path.push_back(definitions[k].name);
    if (marks[k] == Mark::visiting) {
      std::string cycle;
      for (const auto& p : path) cycle += (cycle.empty() ? "" : " -> ") + p;
      throw ValidationError("cyclic sub-action reference: " + cycle);
    }
    marks[k] = Mark::visiting;
    for (const auto* list : {&definitions[k].after, &definitions[k].requires_}) {
      for (const auto& ref : *list) {
        auto it = index.find(ref.action);
        if (it == index.end()) throw ValidationError("unknown action '" + ref.action + "'");
        visit(it->second);
      }
    }
    marks[k] = Mark::done;
    path.pop_back();
    order.push_back(k);
  };
  for (std::size_t k = 0; k < definitions.size(); ++k) visit(k);
  return order;
}

const std::string& builtin_actions_source(Library library) {
  static const std::string standard = kStandardLibrary;
  static const std::string strict = kCoMovementLibrary;
  return library == Library::standard ? standard : strict;
}

std::vector<ActionDefinition> builtin_actions(Library library) {
  return parse_actions_string(builtin_actions_source(library));
}

}  // namespace actrec
