#pragma once

// Reader and writer for the prototxt subset used to describe networks:
//
//   name: "AlexNet"                # optional
//   input: "data"
//   input_dim: 3
//   input_dim: 227
//   input_dim: 227
//   layer {
//     name: "conv1"  type: "Convolution"  bottom: "data"  top: "conv1"
//     convolution_param { num_output: 96 kernel_size: 11 stride: 4 }
//   }
//
// Whitespace is insignificant and '#' starts a comment running to end of line.

#include <charconv>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "augur/descriptor.hpp"
#include "augur/error.hpp"

namespace augur {

namespace prototxt {

enum class TokenType { Ident, Integer, String, Colon, LBrace, RBrace, End };

struct Token {
  TokenType type = TokenType::End;
  std::string text;
  std::int64_t value = 0;
  SourcePos pos;
};

inline const char* describe(TokenType type) {
  switch (type) {
    case TokenType::Ident: return "identifier";
    case TokenType::Integer: return "integer";
    case TokenType::String: return "string";
    case TokenType::Colon: return "':'";
    case TokenType::LBrace: return "'{'";
    case TokenType::RBrace: return "'}'";
    case TokenType::End: return "end of input";
  }
  return "token";
}

// Integer literals above this are rejected; keeps every derived product inside int64.
inline constexpr std::int64_t kMaxInteger = (std::int64_t{1} << 31) - 1;

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_blank();
    Token tok;
    tok.pos = {line_, column_};
    if (at_end()) return tok;

    const char c = text_[offset_];
    if (c == ':' || c == '{' || c == '}') {
      tok.type = c == ':' ? TokenType::Colon : c == '{' ? TokenType::LBrace : TokenType::RBrace;
      tok.text = std::string(1, c);
      advance();
      return tok;
    }
    if (c == '"') return lex_string(tok);
    if (is_digit(c)) return lex_integer(tok);
    if (is_ident_start(c)) {
      tok.type = TokenType::Ident;
      while (!at_end() && is_ident_char(text_[offset_])) tok.text.push_back(advance());
      return tok;
    }
    throw ParseError(ParseErrorKind::Syntax, tok.pos, "unexpected character " + printable(c));
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  static std::string printable(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x20 && u < 0x7f) return std::string("'") + c + "'";
    std::ostringstream os;
    os << "0x" << std::hex << static_cast<int>(u);
    return os.str();
  }

  bool at_end() const { return offset_ >= text_.size(); }

  char advance() {
    const char c = text_[offset_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  void skip_blank() {
    while (!at_end()) {
      const char c = text_[offset_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (!at_end() && text_[offset_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  Token lex_string(Token& tok) {
    tok.type = TokenType::String;
    advance();  // opening quote
    while (true) {
      if (at_end() || text_[offset_] == '\n')
        throw ParseError(ParseErrorKind::Syntax, tok.pos, "unterminated string");
      const char c = advance();
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) throw ParseError(ParseErrorKind::Syntax, tok.pos, "unterminated string");
        const SourcePos esc{line_, column_};
        const char e = advance();
        if (e != '"' && e != '\\')
          throw ParseError(ParseErrorKind::Syntax, esc, "unsupported escape " + printable(e));
        tok.text.push_back(e);
      } else {
        tok.text.push_back(c);
      }
    }
    return tok;
  }

  Token lex_integer(Token& tok) {
    tok.type = TokenType::Integer;
    while (!at_end() && is_digit(text_[offset_])) tok.text.push_back(advance());
    if (!at_end() && is_ident_char(text_[offset_]))
      throw ParseError(ParseErrorKind::Syntax, tok.pos, "malformed integer");
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
    if (ec != std::errc() || value > kMaxInteger)
      throw ParseError(ParseErrorKind::Syntax, tok.pos, "integer out of range");
    tok.value = value;
    return tok;
  }

  std::string_view text_;
  std::size_t offset_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { tok_ = lexer_.next(); }

  NetworkDescriptor parse() {
    NetworkDescriptor net;
    if (is_ident("name")) {
      consume();
      expect(TokenType::Colon);
      net.name = expect(TokenType::String).text;
    }
    if (!is_ident("input")) fail_syntax("expected 'input' declaration");
    consume();
    expect(TokenType::Colon);
    net.input_name = expect(TokenType::String).text;
    std::int64_t* dims[] = {&net.input_shape.channels, &net.input_shape.height,
                            &net.input_shape.width};
    for (std::int64_t* dim : dims) {
      if (!is_ident("input_dim")) fail_syntax("expected 'input_dim' (three are required)");
      const SourcePos at = tok_.pos;
      consume();
      expect(TokenType::Colon);
      *dim = expect(TokenType::Integer).value;
      if (*dim < 1) throw ParseError(ParseErrorKind::InvalidLayer, at, "input_dim must be >= 1");
    }
    if (is_ident("input_dim"))
      fail_syntax("exactly three input_dim entries (channels, height, width) are allowed");

    while (tok_.type != TokenType::End) {
      if (!is_ident("layer")) fail_syntax("expected 'layer' block");
      net.layers.push_back(parse_layer());
    }
    check(net);
    return net;
  }

 private:
  bool is_ident(std::string_view word) const {
    return tok_.type == TokenType::Ident && tok_.text == word;
  }

  Token consume() {
    Token t = std::move(tok_);
    tok_ = lexer_.next();
    return t;
  }

  Token expect(TokenType type) {
    if (tok_.type != type)
      fail_syntax(std::string("expected ") + describe(type) + ", found " + found());
    return consume();
  }

  std::string found() const {
    if (tok_.type == TokenType::End) return "end of input";
    return describe(tok_.type) + std::string(" '") + tok_.text + "'";
  }

  [[noreturn]] void fail_syntax(const std::string& message) const {
    throw ParseError(ParseErrorKind::Syntax, tok_.pos, message);
  }

  LayerSpec parse_layer() {
    LayerSpec layer;
    layer.pos = tok_.pos;
    consume();  // 'layer'
    expect(TokenType::LBrace);

    bool have_name = false;
    bool have_type = false;
    bool have_top = false;
    Token type_token;
    struct PendingBlock {
      Token head;
      std::vector<std::pair<Token, Token>> entries;
    };
    std::optional<PendingBlock> block;

    while (tok_.type != TokenType::RBrace) {
      if (tok_.type != TokenType::Ident) fail_syntax("expected field name, found " + found());
      Token key = consume();
      if (tok_.type == TokenType::LBrace) {
        if (key.text != "convolution_param" && key.text != "pooling_param" &&
            key.text != "inner_product_param" && key.text != "lrn_param")
          throw ParseError(ParseErrorKind::UnknownKey, key.pos,
                           "unknown parameter block '" + key.text + "'");
        if (block)
          throw ParseError(ParseErrorKind::Syntax, key.pos, "layer has more than one parameter block");
        consume();
        PendingBlock pending{key, {}};
        while (tok_.type != TokenType::RBrace) {
          if (tok_.type != TokenType::Ident) fail_syntax("expected parameter name, found " + found());
          Token pkey = consume();
          expect(TokenType::Colon);
          if (tok_.type != TokenType::Ident && tok_.type != TokenType::Integer &&
              tok_.type != TokenType::String)
            fail_syntax("expected parameter value, found " + found());
          pending.entries.emplace_back(std::move(pkey), consume());
        }
        consume();
        block = std::move(pending);
        continue;
      }
      expect(TokenType::Colon);
      if (key.text == "name") {
        if (have_name) throw ParseError(ParseErrorKind::Syntax, key.pos, "duplicate 'name'");
        layer.name = expect(TokenType::String).text;
        have_name = true;
      } else if (key.text == "type") {
        if (have_type) throw ParseError(ParseErrorKind::Syntax, key.pos, "duplicate 'type'");
        type_token = expect(TokenType::String);
        const auto kind = layer_kind_from_string(type_token.text);
        if (!kind)
          throw ParseError(ParseErrorKind::UnknownLayerKind, type_token.pos,
                           "unknown layer type '" + type_token.text + "'");
        layer.kind = *kind;
        have_type = true;
      } else if (key.text == "bottom") {
        bottom_pos_.resize(layers_seen_ + 1);
        bottom_pos_[layers_seen_].push_back(tok_.pos);
        layer.bottoms.push_back(expect(TokenType::String).text);
      } else if (key.text == "top") {
        if (have_top)
          throw ParseError(ParseErrorKind::Syntax, key.pos, "a layer has exactly one 'top'");
        layer.top = expect(TokenType::String).text;
        have_top = true;
      } else {
        throw ParseError(ParseErrorKind::UnknownKey, key.pos, "unknown layer field '" + key.text + "'");
      }
    }
    const SourcePos close = tok_.pos;
    consume();

    if (!have_name) throw ParseError(ParseErrorKind::MissingRequiredParam, layer.pos, "layer has no 'name'");
    if (!have_type)
      throw ParseError(ParseErrorKind::MissingRequiredParam, layer.pos,
                       "layer '" + layer.name + "' has no 'type'");
    if (layer.bottoms.empty())
      throw ParseError(ParseErrorKind::MissingRequiredParam, close,
                       "layer '" + layer.name + "' has no 'bottom'");
    if (!have_top)
      throw ParseError(ParseErrorKind::MissingRequiredParam, close,
                       "layer '" + layer.name + "' has no 'top'");

    layer.params = default_params(layer.kind);
    const char* wanted = block_name(layer.kind);
    if (block && (wanted == nullptr || block->head.text != wanted))
      throw ParseError(ParseErrorKind::UnknownKey, block->head.pos,
                       "'" + block->head.text + "' does not apply to a " +
                           std::string(to_string(layer.kind)) + " layer");
    apply_block(layer, block ? &block->entries : nullptr, block ? block->head.pos : close);
    ++layers_seen_;
    bottom_pos_.resize(layers_seen_);
    return layer;
  }

  static const char* block_name(LayerKind kind) {
    switch (kind) {
      case LayerKind::Convolution: return "convolution_param";
      case LayerKind::Pooling: return "pooling_param";
      case LayerKind::InnerProduct: return "inner_product_param";
      case LayerKind::LRN: return "lrn_param";
      default: return nullptr;
    }
  }

  using Entries = std::vector<std::pair<Token, Token>>;

  class Fields {
   public:
    Fields(const Entries* entries, std::vector<std::string_view> allowed) {
      if (!entries) return;
      for (const auto& [key, value] : *entries) {
        if (std::find(allowed.begin(), allowed.end(), key.text) == allowed.end())
          throw ParseError(ParseErrorKind::UnknownKey, key.pos, "unknown parameter '" + key.text + "'");
        for (const auto& seen : seen_) {
          if (seen.first.text == key.text)
            throw ParseError(ParseErrorKind::Syntax, key.pos, "duplicate parameter '" + key.text + "'");
        }
        seen_.emplace_back(key, value);
      }
    }

    bool has(std::string_view key) const { return find(key) != nullptr; }

    void integer(std::string_view key, std::int64_t& out) const {
      if (const auto* v = find(key)) {
        if (v->type != TokenType::Integer)
          throw ParseError(ParseErrorKind::Syntax, v->pos,
                           "'" + std::string(key) + "' expects an integer");
        out = v->value;
      }
    }

    void boolean(std::string_view key, bool& out) const {
      if (const auto* v = find(key)) {
        if (v->type != TokenType::Ident || (v->text != "true" && v->text != "false"))
          throw ParseError(ParseErrorKind::Syntax, v->pos,
                           "'" + std::string(key) + "' expects true or false");
        out = v->text == "true";
      }
    }

    const Token* find(std::string_view key) const {
      for (const auto& [k, v] : seen_) {
        if (k.text == key) return &v;
      }
      return nullptr;
    }

   private:
    std::vector<std::pair<Token, Token>> seen_;
  };

  static void apply_block(LayerSpec& layer, const Entries* entries, SourcePos at) {
    auto missing = [&](const char* what) {
      throw ParseError(ParseErrorKind::MissingRequiredParam, at,
                       "layer '" + layer.name + "' requires " + what);
    };
    switch (layer.kind) {
      case LayerKind::Convolution: {
        Fields f(entries, {"num_output", "kernel_size", "stride", "pad", "group", "bias_term"});
        if (!f.has("num_output")) missing("num_output");
        if (!f.has("kernel_size")) missing("kernel_size");
        auto& p = std::get<ConvolutionParams>(layer.params);
        f.integer("num_output", p.num_output);
        f.integer("kernel_size", p.kernel_size);
        f.integer("stride", p.stride);
        f.integer("pad", p.pad);
        f.integer("group", p.group);
        f.boolean("bias_term", p.bias_term);
        break;
      }
      case LayerKind::Pooling: {
        Fields f(entries, {"pool", "kernel_size", "stride", "pad", "global_pooling"});
        auto& p = std::get<PoolingParams>(layer.params);
        f.boolean("global_pooling", p.global);
        if (!p.global && !f.has("kernel_size")) missing("kernel_size (or global_pooling: true)");
        f.integer("kernel_size", p.kernel_size);
        f.integer("stride", p.stride);
        f.integer("pad", p.pad);
        if (const auto* v = f.find("pool")) {
          if (v->type == TokenType::Ident && v->text == "MAX") {
            p.method = PoolMethod::Max;
          } else if (v->type == TokenType::Ident && v->text == "AVE") {
            p.method = PoolMethod::Ave;
          } else {
            throw ParseError(ParseErrorKind::Syntax, v->pos, "'pool' expects MAX or AVE");
          }
        }
        break;
      }
      case LayerKind::InnerProduct: {
        Fields f(entries, {"num_output", "bias_term"});
        if (!f.has("num_output")) missing("num_output");
        auto& p = std::get<InnerProductParams>(layer.params);
        f.integer("num_output", p.num_output);
        f.boolean("bias_term", p.bias_term);
        break;
      }
      case LayerKind::LRN: {
        Fields f(entries, {"local_size"});
        f.integer("local_size", std::get<LrnParams>(layer.params).local_size);
        break;
      }
      default:
        break;
    }
  }

  void check(const NetworkDescriptor& net) const {
    const ValidationReport report = validate(net);
    if (report.ok()) return;
    const Finding& f = report.findings.front();
    SourcePos at{1, 1};
    if (f.layer_index >= 0) at = net.layers[f.layer_index].pos;
    ParseErrorKind kind = ParseErrorKind::InvalidLayer;
    if (f.rule == "unique-name") {
      kind = ParseErrorKind::DuplicateLayerName;
    } else if (f.rule == "dangling-bottom") {
      kind = ParseErrorKind::DanglingBottom;
      if (f.layer_index >= 0 && f.bottom_index >= 0 &&
          static_cast<std::size_t>(f.layer_index) < bottom_pos_.size() &&
          static_cast<std::size_t>(f.bottom_index) < bottom_pos_[f.layer_index].size())
        at = bottom_pos_[f.layer_index][f.bottom_index];
    }
    std::string where = f.layer.empty() ? std::string() : "layer '" + f.layer + "': ";
    throw ParseError(kind, at, where + f.message + " [" + f.rule + "]");
  }

  Lexer lexer_;
  Token tok_;
  std::size_t layers_seen_ = 0;
  std::vector<std::vector<SourcePos>> bottom_pos_;
};

inline std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace prototxt

// Parses descriptor text. Every failure is a ParseError carrying a 1-based
// line/column position.
inline NetworkDescriptor parse_descriptor(std::string_view text) {
  return prototxt::Parser(text).parse();
}

// Canonical text form; parse_descriptor(serialize_descriptor(net)) == net.
inline std::string serialize_descriptor(const NetworkDescriptor& net) {
  using prototxt::quote;
  std::ostringstream os;
  if (!net.name.empty()) os << "name: " << quote(net.name) << "\n";
  os << "input: " << quote(net.input_name) << "\n";
  os << "input_dim: " << net.input_shape.channels << "\n";
  os << "input_dim: " << net.input_shape.height << "\n";
  os << "input_dim: " << net.input_shape.width << "\n";

  for (const LayerSpec& layer : net.layers) {
    os << "layer {\n";
    os << "  name: " << quote(layer.name) << "\n";
    os << "  type: " << quote(to_string(layer.kind)) << "\n";
    for (const auto& bottom : layer.bottoms) os << "  bottom: " << quote(bottom) << "\n";
    os << "  top: " << quote(layer.top) << "\n";
    std::visit(
        [&os](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, ConvolutionParams>) {
            os << "  convolution_param {\n";
            os << "    num_output: " << p.num_output << "\n";
            os << "    kernel_size: " << p.kernel_size << "\n";
            if (p.stride != 1) os << "    stride: " << p.stride << "\n";
            if (p.pad != 0) os << "    pad: " << p.pad << "\n";
            if (p.group != 1) os << "    group: " << p.group << "\n";
            if (!p.bias_term) os << "    bias_term: false\n";
            os << "  }\n";
          } else if constexpr (std::is_same_v<P, PoolingParams>) {
            os << "  pooling_param {\n";
            os << "    pool: " << (p.method == PoolMethod::Max ? "MAX" : "AVE") << "\n";
            if (p.global) os << "    global_pooling: true\n";
            if (!p.global || p.kernel_size != 0) os << "    kernel_size: " << p.kernel_size << "\n";
            if (p.stride != 1) os << "    stride: " << p.stride << "\n";
            if (p.pad != 0) os << "    pad: " << p.pad << "\n";
            os << "  }\n";
          } else if constexpr (std::is_same_v<P, InnerProductParams>) {
            os << "  inner_product_param {\n";
            os << "    num_output: " << p.num_output << "\n";
            if (!p.bias_term) os << "    bias_term: false\n";
            os << "  }\n";
          } else if constexpr (std::is_same_v<P, LrnParams>) {
            os << "  lrn_param {\n";
            os << "    local_size: " << p.local_size << "\n";
            os << "  }\n";
          }
        },
        layer.params);
    os << "}\n";
  }
  return os.str();
}

}  // namespace augur
