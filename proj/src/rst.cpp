#include "relalign/rst.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "relalign/rng.hpp"

namespace relalign::ingest {

namespace {

struct Token {
  enum Kind { LPAREN, RPAREN, ATOM, TEXT } kind;
  std::string value;
};

std::vector<Token> lex_dis(const std::string& content, const std::string& doc_id) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = content.size();
  while (i < n) {
    const char c = content[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Token::LPAREN, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Token::RPAREN, ")"});
      ++i;
    } else if (c == '_' && i + 1 < n && content[i + 1] == '!') {
      const std::size_t end = content.find("!_", i + 2);
      if (end == std::string::npos) {
        throw ValidationError(doc_id + ": unterminated text span");
      }
      out.push_back({Token::TEXT, content.substr(i + 2, end - i - 2)});
      i = end + 2;
    } else {
      std::size_t j = i;
      while (j < n && !std::isspace(static_cast<unsigned char>(content[j])) &&
             content[j] != '(' && content[j] != ')') {
        ++j;
      }
      out.push_back({Token::ATOM, content.substr(i, j - i)});
      i = j;
    }
  }
  return out;
}

struct RawNode {
  std::string role;
  int span_lo = 0, span_hi = 0;
  int leaf = 0;
  std::string rel2par;
  std::string text;
  bool has_text = false;
  std::vector<RawNode> children;
};

class DisParser {
 public:
  DisParser(std::vector<Token> tokens, std::string doc_id)
      : tokens_(std::move(tokens)), doc_id_(std::move(doc_id)) {}

  RawNode parse() {
    RawNode root = parse_node();
    if (pos_ != tokens_.size()) {
      throw ValidationError(doc_id_ + ": trailing content after the root node");
    }
    return root;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    if (pos_ + ahead >= tokens_.size()) {
      throw ValidationError(doc_id_ + ": unexpected end of input");
    }
    return tokens_[pos_ + ahead];
  }
  Token take() {
    const Token& t = peek();
    ++pos_;
    return t;
  }
  void expect(Token::Kind kind, const char* what) {
    if (take().kind != kind) {
      throw ValidationError(doc_id_ + ": expected " + what);
    }
  }
  int take_int(const char* what) {
    const Token t = take();
    if (t.kind != Token::ATOM) throw ValidationError(doc_id_ + ": expected " + what);
    try {
      return std::stoi(t.value);
    } catch (const std::exception&) {
      throw ValidationError(doc_id_ + ": bad number '" + t.value + "' for " + what);
    }
  }

  RawNode parse_node() {
    expect(Token::LPAREN, "'('");
    RawNode node;
    const Token role = take();
    if (role.kind != Token::ATOM ||
        (role.value != "Root" && role.value != "Nucleus" && role.value != "Satellite")) {
      throw ValidationError(doc_id_ + ": expected node role, got '" + role.value + "'");
    }
    node.role = role.value;
    while (peek().kind != Token::RPAREN) {
      expect(Token::LPAREN, "'(' inside node");
      const Token head = take();
      if (head.kind != Token::ATOM) {
        throw ValidationError(doc_id_ + ": expected field or child node");
      }
      if (head.value == "span") {
        node.span_lo = take_int("span start");
        node.span_hi = take_int("span end");
        expect(Token::RPAREN, "')' after span");
      } else if (head.value == "leaf") {
        node.leaf = take_int("leaf index");
        node.span_lo = node.span_hi = node.leaf;
        expect(Token::RPAREN, "')' after leaf");
      } else if (head.value == "rel2par") {
        const Token rel = take();
        if (rel.kind != Token::ATOM) throw ValidationError(doc_id_ + ": bad rel2par");
        node.rel2par = rel.value;
        expect(Token::RPAREN, "')' after rel2par");
      } else if (head.value == "text") {
        const Token text = take();
        if (text.kind != Token::TEXT) throw ValidationError(doc_id_ + ": bad text field");
        node.text = text.value;
        node.has_text = true;
        expect(Token::RPAREN, "')' after text");
      } else if (head.value == "Root" || head.value == "Nucleus" || head.value == "Satellite") {
        // Child node: rewind past the '(' and role we consumed.
        pos_ -= 2;
        node.children.push_back(parse_node());
      } else {
        throw ValidationError(doc_id_ + ": unknown field '" + head.value + "'");
      }
    }
    expect(Token::RPAREN, "')'");
    return node;
  }

  std::vector<Token> tokens_;
  std::string doc_id_;
  std::size_t pos_ = 0;
};

std::string normalize_relation(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  for (unsigned char c : name) out.push_back(static_cast<char>(std::tolower(c)));
  if (out.size() > 2 && out.compare(out.size() - 2, 2, "-e") == 0) {
    out.resize(out.size() - 2);
  }
  return out;
}

std::unique_ptr<RstNode> convert(const RawNode& raw, std::vector<std::pair<int, std::string>>& edus,
                                 const std::string& doc_id) {
  auto node = std::make_unique<RstNode>();
  node->span_lo = raw.span_lo;
  node->span_hi = raw.span_hi;
  node->nuclearity = raw.role == "Root"        ? Nuclearity::ROOT
                     : raw.role == "Satellite" ? Nuclearity::SATELLITE
                                               : Nuclearity::NUCLEUS;
  if (raw.children.empty()) {
    if (!raw.has_text || raw.leaf == 0) {
      throw ValidationError(doc_id + ": leaf without text or index (span " +
                            std::to_string(raw.span_lo) + ")");
    }
    edus.emplace_back(raw.leaf, raw.text);
    return node;
  }
  for (const auto& child : raw.children) {
    node->children.push_back(convert(child, edus, doc_id));
  }
  // The relation held between children lives on the children's rel2par
  // fields: on the satellite for mononuclear relations, shared across the
  // nuclei for multinuclear ones. "span" marks the structural side.
  for (const auto& child : raw.children) {
    if (!child.rel2par.empty() && child.rel2par != "span") {
      node->relation = child.rel2par;
      break;
    }
  }
  return node;
}

void validate_node(const RstNode& node, const std::string& doc_id, std::vector<int>& leaf_order) {
  if (node.is_leaf()) {
    if (node.span_lo != node.span_hi) {
      throw ValidationError(doc_id + ": leaf with non-unit span");
    }
    leaf_order.push_back(node.span_lo);
    return;
  }
  if (node.children.size() < 2) {
    throw ValidationError(doc_id + ": internal node over span " + std::to_string(node.span_lo) +
                          ".." + std::to_string(node.span_hi) + " has a single child");
  }
  if (node.children.front()->span_lo != node.span_lo ||
      node.children.back()->span_hi != node.span_hi) {
    throw ValidationError(doc_id + ": node span does not cover its children");
  }
  for (std::size_t i = 0; i + 1 < node.children.size(); ++i) {
    if (node.children[i]->span_hi + 1 != node.children[i + 1]->span_lo) {
      throw ValidationError(doc_id + ": sibling spans not adjacent at EDU " +
                            std::to_string(node.children[i]->span_hi));
    }
  }
  for (const auto& child : node.children) validate_node(*child, doc_id, leaf_order);
}

std::unique_ptr<RstNode> clone_binarized(const RstNode& node) {
  auto out = std::make_unique<RstNode>();
  out->span_lo = node.span_lo;
  out->span_hi = node.span_hi;
  out->nuclearity = node.nuclearity;
  out->relation = node.relation;
  if (node.is_leaf()) return out;

  std::vector<std::unique_ptr<RstNode>> kids;
  kids.reserve(node.children.size());
  for (const auto& c : node.children) kids.push_back(clone_binarized(*c));

  // Fold right: (a b c) -> (a (b c)), replicating the relation on the
  // introduced node.
  while (kids.size() > 2) {
    auto right = std::move(kids.back());
    kids.pop_back();
    auto left = std::move(kids.back());
    kids.pop_back();
    auto merged = std::make_unique<RstNode>();
    merged->span_lo = left->span_lo;
    merged->span_hi = right->span_hi;
    merged->nuclearity = Nuclearity::NUCLEUS;
    merged->relation = node.relation;
    merged->children.push_back(std::move(left));
    merged->children.push_back(std::move(right));
    kids.push_back(std::move(merged));
  }
  out->children = std::move(kids);
  return out;
}

void collect_span_text(const RstTree& tree, int lo, int hi, std::string& out) {
  for (int i = lo; i <= hi; ++i) {
    const std::string& edu = tree.edus[i - 1];
    if (!out.empty() && !edu.empty()) out += " ";
    out += edu;
  }
}

void extract_from_node(const RstNode& node, const RstTree& tree, const RelationNameMap& name_map,
                       const RelationTaxonomy& taxonomy, std::vector<RelationInstance>& out) {
  if (node.is_leaf()) return;
  if (node.children.size() != 2) {
    throw ValidationError(tree.doc_id + ": tree is not binary at span " +
                          std::to_string(node.span_lo) + ".." + std::to_string(node.span_hi));
  }
  if (!node.relation.empty()) {
    const std::string coarse = name_map.coarse(node.relation);
    const int label = taxonomy.find(coarse);
    if (label < 0) {
      throw ValidationError(tree.doc_id + ": coarse class '" + coarse + "' not in taxonomy");
    }
    RelationInstance inst;
    collect_span_text(tree, node.children[0]->span_lo, node.children[0]->span_hi, inst.arg1);
    collect_span_text(tree, node.children[1]->span_lo, node.children[1]->span_hi, inst.arg2);
    inst.label = label;
    inst.framework = Framework::RST;
    inst.relation_kind = RelationKind::NA;
    inst.doc_id = tree.doc_id;
    inst.source = InstanceSource::ORIGINAL;
    out.push_back(std::move(inst));
  }
  for (const auto& child : node.children) {
    extract_from_node(*child, tree, name_map, taxonomy, out);
  }
}

}  // namespace

void RstTree::validate() const {
  if (!root) throw ValidationError(doc_id + ": empty tree");
  if (edus.empty()) throw ValidationError(doc_id + ": no EDUs");
  std::vector<int> leaf_order;
  validate_node(*root, doc_id, leaf_order);
  if (leaf_order.size() != edus.size()) {
    throw ValidationError(doc_id + ": " + std::to_string(leaf_order.size()) + " leaves but " +
                          std::to_string(edus.size()) + " EDUs");
  }
  for (std::size_t i = 0; i < leaf_order.size(); ++i) {
    if (leaf_order[i] != static_cast<int>(i) + 1) {
      throw ValidationError(doc_id + ": leaves out of order at position " + std::to_string(i + 1));
    }
  }
  if (root->span_lo != 1 || root->span_hi != static_cast<int>(edus.size())) {
    throw ValidationError(doc_id + ": root does not cover all EDUs");
  }
}

RstTree parse_dis(const std::string& content, const std::string& doc_id) {
  RawNode raw = DisParser(lex_dis(content, doc_id), doc_id).parse();
  RstTree tree;
  tree.doc_id = doc_id;
  std::vector<std::pair<int, std::string>> edus;
  tree.root = convert(raw, edus, doc_id);
  std::sort(edus.begin(), edus.end());
  tree.edus.reserve(edus.size());
  for (std::size_t i = 0; i < edus.size(); ++i) {
    if (edus[i].first != static_cast<int>(i) + 1) {
      throw ValidationError(doc_id + ": EDU indices not contiguous at " +
                            std::to_string(edus[i].first));
    }
    tree.edus.push_back(edus[i].second);
  }
  tree.validate();
  return tree;
}

RstTree load_dis_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open tree file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string doc_id = path;
  const auto slash = doc_id.find_last_of('/');
  if (slash != std::string::npos) doc_id = doc_id.substr(slash + 1);
  const auto dot = doc_id.find('.');
  if (dot != std::string::npos) doc_id = doc_id.substr(0, dot);
  return parse_dis(ss.str(), doc_id);
}

RstTree binarize_rst_tree(const RstTree& tree) {
  tree.validate();
  RstTree out;
  out.doc_id = tree.doc_id;
  out.edus = tree.edus;
  out.root = clone_binarized(*tree.root);
  out.validate();
  return out;
}

std::string RelationNameMap::coarse(const std::string& fine) const {
  const auto it = entries.find(normalize_relation(fine));
  if (it == entries.end()) {
    throw ValidationError("relation name '" + fine + "' not covered by the name map");
  }
  return it->second;
}

std::vector<std::string> RelationNameMap::coarse_classes() const {
  std::set<std::string> s;
  for (const auto& [fine, coarse] : entries) s.insert(coarse);
  return {s.begin(), s.end()};
}

RelationNameMap load_relation_name_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open name map: " + path);
  RelationNameMap map;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string fine, coarse;
    if (!(ss >> fine >> coarse)) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 'fine coarse'");
    }
    map.entries[normalize_relation(fine)] = coarse;
  }
  if (map.entries.empty()) throw ValidationError(path + ": empty name map");
  return map;
}

std::vector<RelationInstance> extract_rst_instances(const RstTree& tree,
                                                    const RelationNameMap& name_map,
                                                    const RelationTaxonomy& taxonomy) {
  tree.validate();
  std::vector<RelationInstance> out;
  extract_from_node(*tree.root, tree, name_map, taxonomy, out);
  return out;
}

RelationTaxonomy rst_taxonomy_from_data(const std::vector<std::string>& coarse_names) {
  std::set<std::string> distinct(coarse_names.begin(), coarse_names.end());
  RelationTaxonomy tax;
  tax.framework_name = "rst";
  for (const auto& name : distinct) tax.labels.push_back(LabelRecord{name, {}, {}});
  tax.validate();
  return tax;
}

DatasetSplits split_rst_validation(const std::vector<RelationInstance>& train, double fraction,
                                   std::uint64_t seed) {
  if (train.empty()) throw ValidationError("validation split: empty input");
  if (fraction <= 0.0 || fraction >= 1.0) {
    throw ValidationError("validation split: fraction must be in (0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < train.size(); ++i) by_label[train[i].label].push_back(i);

  Rng rng(seed);
  std::vector<bool> to_dev(train.size(), false);
  for (auto& [label, idx] : by_label) {
    if (idx.size() < 2) continue;  // singleton classes stay in train
    rng.shuffle(idx);
    std::size_t n_dev = static_cast<std::size_t>(std::llround(fraction * idx.size()));
    n_dev = std::min(n_dev, idx.size() - 1);
    for (std::size_t j = 0; j < n_dev; ++j) to_dev[idx[j]] = true;
  }

  DatasetSplits out;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (to_dev[i] ? out.dev : out.train).push_back(train[i]);
  }
  return out;
}

}  // namespace relalign::ingest
