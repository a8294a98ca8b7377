#include "passforge/circuit_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "passforge/error.hpp"

namespace passforge {
namespace {

constexpr int kMaxRegisterSize = 64;

struct Token {
  enum class Kind { Ident, Number, String, Symbol, Arrow, End } kind = Kind::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space_and_comments();
    Token tok;
    tok.line = line_;
    tok.column = column_;
    if (pos_ >= text_.size()) return tok;
    const char ch = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        advance();
      }
      tok.kind = Token::Kind::Ident;
      tok.text = std::string(text_.substr(start, pos_ - start));
      return tok;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        advance();
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        advance();
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
      }
      tok.kind = Token::Kind::Number;
      tok.text = std::string(text_.substr(start, pos_ - start));
      const auto* first = tok.text.data();
      const auto* last = first + tok.text.size();
      auto [ptr, ec] = std::from_chars(first, last, tok.number);
      if (ec != std::errc() || ptr != last) throw ParseError("malformed number '" + tok.text + "'", tok.line, tok.column);
      return tok;
    }
    if (ch == '"') {
      advance();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] != '"') advance();
      if (pos_ >= text_.size()) throw ParseError("unterminated string", tok.line, tok.column);
      tok.kind = Token::Kind::String;
      tok.text = std::string(text_.substr(start, pos_ - start));
      advance();
      return tok;
    }
    if (ch == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
      advance();
      advance();
      tok.kind = Token::Kind::Arrow;
      tok.text = "->";
      return tok;
    }
    advance();
    tok.kind = Token::Kind::Symbol;
    tok.text = std::string(1, ch);
    return tok;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        advance();
      } else if (text_.substr(pos_, 2) == "//") {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { tok_ = lexer_.next(); }

  QuantumCircuit parse() {
    std::optional<QuantumCircuit> circuit;
    while (tok_.kind != Token::Kind::End) {
      if (tok_.kind != Token::Kind::Ident) fail("expected statement");
      const Token head = tok_;
      if (head.text == "OPENQASM") {
        advance();
        if (tok_.kind != Token::Kind::Number) fail("expected version number");
        advance();
        expect_symbol(";");
      } else if (head.text == "include") {
        advance();
        if (tok_.kind != Token::Kind::String) fail("expected include file name");
        advance();
        expect_symbol(";");
      } else if (head.text == "qreg") {
        if (circuit) fail("only one qreg is supported");
        advance();
        qreg_ = expect_ident();
        const int size = parse_register_size();
        expect_symbol(";");
        circuit.emplace(size, QubitSpace::Logical);
      } else if (head.text == "creg") {
        if (!creg_.empty()) fail("only one creg is supported");
        advance();
        creg_ = expect_ident();
        creg_size_ = parse_register_size();
        expect_symbol(";");
      } else {
        if (!circuit) fail("gate before qreg declaration");
        parse_instruction(*circuit);
      }
    }
    if (!circuit) throw ParseError("missing qreg declaration", tok_.line, tok_.column);
    circuit->validate();
    return std::move(*circuit);
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, tok_.line, tok_.column); }

  void advance() { tok_ = lexer_.next(); }

  bool is_symbol(std::string_view s) const { return tok_.kind == Token::Kind::Symbol && tok_.text == s; }

  void expect_symbol(std::string_view s) {
    if (!is_symbol(s)) fail("expected '" + std::string(s) + "'");
    advance();
  }

  std::string expect_ident() {
    if (tok_.kind != Token::Kind::Ident) fail("expected identifier");
    std::string name = tok_.text;
    advance();
    return name;
  }

  int expect_index() {
    if (tok_.kind != Token::Kind::Number || tok_.number != std::floor(tok_.number) || tok_.number < 0) {
      fail("expected non-negative integer");
    }
    const double v = tok_.number;
    if (v > 1e6) fail("index too large");
    advance();
    return static_cast<int>(v);
  }

  int parse_register_size() {
    expect_symbol("[");
    const Token at = tok_;
    const int size = expect_index();
    if (size < 1 || size > kMaxRegisterSize) {
      throw ParseError("register size " + std::to_string(size) + " exceeds supported maximum of " +
                           std::to_string(kMaxRegisterSize),
                       at.line, at.column);
    }
    expect_symbol("]");
    return size;
  }

  int parse_qubit(const QuantumCircuit& c) {
    const Token at = tok_;
    if (expect_ident() != qreg_) throw ParseError("unknown quantum register", at.line, at.column);
    expect_symbol("[");
    const Token idx_at = tok_;
    const int q = expect_index();
    if (q >= c.num_qubits()) throw ParseError("qubit index out of range", idx_at.line, idx_at.column);
    expect_symbol("]");
    return q;
  }

  int parse_clbit() {
    const Token at = tok_;
    if (creg_.empty() || expect_ident() != creg_) throw ParseError("unknown classical register", at.line, at.column);
    expect_symbol("[");
    const Token idx_at = tok_;
    const int c = expect_index();
    if (c >= creg_size_) throw ParseError("classical bit index out of range", idx_at.line, idx_at.column);
    expect_symbol("]");
    return c;
  }

  // expr := term (('+'|'-') term)*
  double parse_expr() {
    double v = parse_term();
    while (is_symbol("+") || is_symbol("-")) {
      const bool plus = is_symbol("+");
      advance();
      const double rhs = parse_term();
      v = plus ? v + rhs : v - rhs;
    }
    return v;
  }

  double parse_term() {
    double v = parse_unary();
    while (is_symbol("*") || is_symbol("/")) {
      const bool mul = is_symbol("*");
      advance();
      const double rhs = parse_unary();
      if (!mul && rhs == 0.0) fail("division by zero");
      v = mul ? v * rhs : v / rhs;
    }
    return v;
  }

  double parse_unary() {
    if (is_symbol("-")) {
      advance();
      return -parse_unary();
    }
    if (is_symbol("+")) {
      advance();
      return parse_unary();
    }
    if (is_symbol("(")) {
      advance();
      const double v = parse_expr();
      expect_symbol(")");
      return v;
    }
    if (tok_.kind == Token::Kind::Number) {
      const double v = tok_.number;
      advance();
      return v;
    }
    if (tok_.kind == Token::Kind::Ident && tok_.text == "pi") {
      advance();
      return std::numbers::pi;
    }
    fail("expected angle expression");
  }

  void parse_instruction(QuantumCircuit& c) {
    const Token head = tok_;
    const std::string name = expect_ident();
    if (name == "measure") {
      const int q = parse_qubit(c);
      if (tok_.kind != Token::Kind::Arrow) fail("expected '->'");
      advance();
      const int cl = parse_clbit();
      expect_symbol(";");
      append(c, make_measure(q, cl), head);
      return;
    }
    static const std::pair<std::string_view, GateKind> kGates[] = {
        {"id", GateKind::I},   {"x", GateKind::X},   {"sx", GateKind::SX},    {"rz", GateKind::RZ},
        {"h", GateKind::H},    {"s", GateKind::S},   {"t", GateKind::T},      {"cx", GateKind::CX},
        {"cz", GateKind::CZ},  {"swap", GateKind::SWAP}, {"ccx", GateKind::CCX},
    };
    std::optional<GateKind> kind;
    for (const auto& [n, k] : kGates) {
      if (n == name) kind = k;
    }
    if (!kind) throw ParseError("unsupported gate '" + name + "'", head.line, head.column);
    double angle = 0.0;
    if (*kind == GateKind::RZ) {
      expect_symbol("(");
      angle = parse_expr();
      expect_symbol(")");
    }
    std::array<int, 3> qs{-1, -1, -1};
    for (int i = 0; i < arity(*kind); ++i) {
      if (i > 0) expect_symbol(",");
      qs[i] = parse_qubit(c);
    }
    expect_symbol(";");
    Instruction inst = make_gate(*kind, qs[0], qs[1], qs[2]);
    inst.angle = angle;
    append(c, inst, head);
  }

  void append(QuantumCircuit& c, const Instruction& inst, const Token& at) {
    try {
      c.append(inst);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), at.line, at.column);
    }
  }

  Lexer lexer_;
  Token tok_;
  std::string qreg_;
  std::string creg_;
  int creg_size_ = 0;
};

std::string format_angle(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

QuantumCircuit parse_qasm_subset(std::string_view text) { return Parser(text).parse(); }

std::string serialize_qasm_subset(const QuantumCircuit& c, std::string_view header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) {
    std::istringstream lines{std::string(header_comment)};
    for (std::string line; std::getline(lines, line);) out << "// " << line << '\n';
  }
  out << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";
  out << "qreg q[" << c.num_qubits() << "];\n";
  if (c.num_clbits() > 0) out << "creg c[" << c.num_clbits() << "];\n";
  for (const auto& inst : c.instructions()) {
    if (inst.kind == GateKind::MEASURE) {
      out << "measure q[" << inst.qubits[0] << "] -> c[" << inst.clbit << "];\n";
      continue;
    }
    out << qasm_name(inst.kind);
    if (inst.kind == GateKind::RZ) out << '(' << format_angle(inst.angle) << ')';
    for (int i = 0; i < inst.arity(); ++i) out << (i == 0 ? " " : ",") << "q[" << inst.qubits[i] << ']';
    out << ";\n";
  }
  return out.str();
}

nlohmann::json circuit_to_json(const QuantumCircuit& c) {
  nlohmann::json insts = nlohmann::json::array();
  for (const auto& inst : c.instructions()) {
    nlohmann::json j;
    j["gate"] = gate_name(inst.kind);
    j["qubits"] = std::vector<int>(inst.operands().begin(), inst.operands().end());
    if (inst.kind == GateKind::RZ) j["params"] = {inst.angle};
    if (inst.kind == GateKind::MEASURE) j["clbit"] = inst.clbit;
    insts.push_back(std::move(j));
  }
  return {
      {"num_qubits", c.num_qubits()},
      {"qubit_space", c.qubit_space() == QubitSpace::Logical ? "logical" : "physical"},
      {"instructions", std::move(insts)},
      {"measured_qubits", c.measured_qubits()},
  };
}

QuantumCircuit circuit_from_json(const nlohmann::json& j) {
  try {
    const std::string space = j.value("qubit_space", "logical");
    if (space != "logical" && space != "physical") throw ValidationError("unknown qubit_space '" + space + "'");
    QuantumCircuit c(j.at("num_qubits").get<int>(), space == "logical" ? QubitSpace::Logical : QubitSpace::Physical);
    for (const auto& ji : j.at("instructions")) {
      const auto name = ji.at("gate").get<std::string>();
      const auto qubits = ji.at("qubits").get<std::vector<int>>();
      std::optional<GateKind> kind;
      for (int k = 0; k < kNumGateKinds; ++k) {
        if (gate_name(static_cast<GateKind>(k)) == name) kind = static_cast<GateKind>(k);
      }
      if (!kind) throw ValidationError("unsupported gate '" + name + "'");
      if (static_cast<int>(qubits.size()) != arity(*kind)) throw ValidationError("operand count mismatch for " + name);
      if (*kind == GateKind::MEASURE) {
        c.measure(qubits[0], ji.at("clbit").get<int>());
        continue;
      }
      Instruction inst = make_gate(*kind, qubits[0], qubits.size() > 1 ? qubits[1] : -1,
                                   qubits.size() > 2 ? qubits[2] : -1);
      if (*kind == GateKind::RZ) inst.angle = ji.at("params").at(0).get<double>();
      c.append(inst);
    }
    if (j.contains("measured_qubits") && j["measured_qubits"].get<std::vector<int>>() != c.measured_qubits()) {
      throw ValidationError("measured_qubits does not match measurement instructions");
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("circuit JSON: ") + e.what());
  }
}

QuantumCircuit load_circuit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open circuit file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    try {
      return circuit_from_json(nlohmann::json::parse(buf.str()));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("circuit JSON: ") + e.what());
    }
  }
  return parse_qasm_subset(buf.str());
}

}  // namespace passforge
