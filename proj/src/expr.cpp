#include "racing_sr/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "racing_sr/eval.hpp"

namespace racing_sr {

int arity(Op op) noexcept {
    switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
        return 2;
    case Op::sin:
    case Op::cos:
    case Op::log:
    case Op::exp:
    case Op::sqrt:
        return 1;
    case Op::var:
    case Op::constant:
        return 0;
    }
    return 0;
}

std::string_view op_symbol(Op op) noexcept {
    switch (op) {
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "/";
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::log: return "log";
    case Op::exp: return "exp";
    case Op::sqrt: return "sqrt";
    case Op::var: return "var";
    case Op::constant: return "C";
    }
    return "?";
}

std::optional<Op> op_from_symbol(std::string_view text) noexcept {
    if (text == "+" || text == "add") return Op::add;
    if (text == "-" || text == "sub") return Op::sub;
    if (text == "*" || text == "mul") return Op::mul;
    if (text == "/" || text == "div") return Op::div;
    if (text == "sin") return Op::sin;
    if (text == "cos") return Op::cos;
    if (text == "log") return Op::log;
    if (text == "exp") return Op::exp;
    if (text == "sqrt") return Op::sqrt;
    return std::nullopt;
}

Node make_op(Op op) { return Node{op, true, 0, std::nullopt}; }
Node make_var(std::uint32_t index) { return Node{Op::var, true, index, std::nullopt}; }
Node make_open_constant() { return Node{Op::constant, true, 0, std::nullopt}; }
Node make_frozen_constant(double value) { return Node{Op::constant, false, 0, value}; }

// ---------------------------------------------------------------------------
// OperatorSet

OperatorSet::OperatorSet(std::vector<Op> binary, std::vector<Op> unary)
    : binary_(std::move(binary)), unary_(std::move(unary)) {
    if (binary_.empty()) throw std::invalid_argument("operator set needs at least one binary operator");
    for (Op op : binary_) {
        if (!is_binary(op)) throw std::invalid_argument("non-binary operator in binary list");
    }
    for (Op op : unary_) {
        if (!is_unary(op)) throw std::invalid_argument("non-unary operator in unary list");
    }
    auto dedup = [](std::vector<Op>& v) {
        std::vector<Op> out;
        for (Op op : v) {
            if (std::find(out.begin(), out.end(), op) == out.end()) out.push_back(op);
        }
        v = std::move(out);
    };
    dedup(binary_);
    dedup(unary_);
}

OperatorSet OperatorSet::parse(std::string_view list) {
    std::vector<Op> bin;
    std::vector<Op> un;
    std::size_t start = 0;
    while (start <= list.size()) {
        auto end = list.find(',', start);
        if (end == std::string_view::npos) end = list.size();
        auto tok = list.substr(start, end - start);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front()))) tok.remove_prefix(1);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back()))) tok.remove_suffix(1);
        if (!tok.empty()) {
            auto op = op_from_symbol(tok);
            if (!op) throw std::invalid_argument("unknown operator '" + std::string(tok) + "'");
            (is_binary(*op) ? bin : un).push_back(*op);
        }
        start = end + 1;
    }
    return OperatorSet(std::move(bin), std::move(un));
}

bool OperatorSet::contains(Op op) const {
    return std::find(binary_.begin(), binary_.end(), op) != binary_.end() ||
           std::find(unary_.begin(), unary_.end(), op) != unary_.end();
}

std::string OperatorSet::to_string() const {
    std::string s;
    for (Op op : binary_) {
        if (!s.empty()) s += ',';
        s += op_symbol(op);
    }
    for (Op op : unary_) {
        s += ',';
        s += op_symbol(op);
    }
    return s;
}

// ---------------------------------------------------------------------------
// ExpressionTree

ExpressionTree::ExpressionTree(std::vector<Node> prefix, std::size_t n_vars)
    : nodes_(std::move(prefix)), n_vars_(n_vars) {
    if (nodes_.empty()) throw InvalidTree("empty expression tree");
    if (n_vars_ > VarSet::kMaxVars) throw InvalidTree("too many variables");
    std::size_t need = 1;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (need == 0) throw InvalidTree("trailing nodes after a complete tree");
        const Node& nd = nodes_[i];
        if (nd.op == Op::var && nd.var >= n_vars_) {
            throw InvalidTree("variable x" + std::to_string(nd.var) + " out of range (n_vars=" +
                              std::to_string(n_vars_) + ")");
        }
        if (nd.op == Op::constant && nd.value && nd.editable) throw InvalidTree("frozen constant marked editable");
        need = need - 1 + static_cast<std::size_t>(arity(nd.op));
    }
    if (need != 0) throw InvalidTree("incomplete expression tree");
}

std::size_t ExpressionTree::subtree_end(std::size_t i) const {
    std::size_t need = 1;
    std::size_t j = i;
    while (need > 0) {
        need = need - 1 + static_cast<std::size_t>(arity(nodes_[j].op));
        ++j;
    }
    return j;
}

std::span<const Node> ExpressionTree::subtree(std::size_t i) const {
    return std::span<const Node>(nodes_).subspan(i, subtree_end(i) - i);
}

std::optional<std::size_t> ExpressionTree::parent(std::size_t i) const {
    if (i == 0) return std::nullopt;
    // The parent is the nearest preceding node whose subtree covers i.
    for (std::size_t p = i; p-- > 0;) {
        if (!is_leaf(nodes_[p].op) && subtree_end(p) > i) return p;
    }
    return std::nullopt;
}

std::size_t ExpressionTree::depth() const {
    // Stack of remaining child slots per open ancestor.
    std::vector<int> open;
    std::size_t best = 0;
    for (const Node& nd : nodes_) {
        best = std::max(best, open.size() + 1);
        const int a = arity(nd.op);
        if (a > 0) {
            open.push_back(a);
        } else {
            while (!open.empty() && --open.back() == 0) open.pop_back();
        }
    }
    return best;
}

std::vector<std::size_t> ExpressionTree::open_constant_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].is_open_constant()) out.push_back(i);
    }
    return out;
}

ExpressionTree ExpressionTree::with_subtree(std::size_t pos, std::span<const Node> replacement) const {
    const std::size_t end = subtree_end(pos);
    std::vector<Node> next;
    next.reserve(nodes_.size() - (end - pos) + replacement.size());
    next.insert(next.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(pos));
    next.insert(next.end(), replacement.begin(), replacement.end());
    next.insert(next.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
    return ExpressionTree(std::move(next), n_vars_);
}

bool structurally_equal(const ExpressionTree& a, const ExpressionTree& b) {
    if (a.size() != b.size() || a.n_vars() != b.n_vars()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Node& x = a.node(i);
        const Node& y = b.node(i);
        if (x.op != y.op) return false;
        if (x.op == Op::var && x.var != y.var) return false;
        if (x.op == Op::constant && x.value != y.value) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Parser

ParseError::ParseError(const std::string& what, std::size_t position)
    : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}

namespace {

enum class Tok { number, var, open_c, func, plus, minus, star, slash, lparen, rparen, end };

struct Token {
    Tok kind;
    std::size_t pos;
    double number = 0.0;
    std::uint32_t var = 0;
    Op func = Op::sin;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            if (i_ >= text_.size()) {
                out.push_back({Tok::end, i_});
                return out;
            }
            const char c = text_[i_];
            const std::size_t pos = i_;
            const bool operand_expected =
                out.empty() || (out.back().kind != Tok::number && out.back().kind != Tok::var &&
                                out.back().kind != Tok::open_c && out.back().kind != Tok::rparen);
            if (c == '-' && operand_expected && i_ + 1 < text_.size() &&
                (std::isdigit(static_cast<unsigned char>(text_[i_ + 1])) || text_[i_ + 1] == '.')) {
                ++i_;
                Token t = number(pos);
                t.number = -t.number;
                out.push_back(t);
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                out.push_back(number(pos));
                continue;
            }
            switch (c) {
            case '+': out.push_back({Tok::plus, pos}); ++i_; continue;
            case '-': out.push_back({Tok::minus, pos}); ++i_; continue;
            case '*': out.push_back({Tok::star, pos}); ++i_; continue;
            case '/': out.push_back({Tok::slash, pos}); ++i_; continue;
            case '(': out.push_back({Tok::lparen, pos}); ++i_; continue;
            case ')': out.push_back({Tok::rparen, pos}); ++i_; continue;
            default: break;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t j = i_;
                while (j < text_.size() && std::isalnum(static_cast<unsigned char>(text_[j]))) ++j;
                const std::string_view word = text_.substr(i_, j - i_);
                i_ = j;
                if (word == "C") {
                    out.push_back({Tok::open_c, pos});
                } else if (word.size() > 1 && word[0] == 'x' &&
                           std::all_of(word.begin() + 1, word.end(),
                                       [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
                    Token t{Tok::var, pos};
                    auto [p, ec] = std::from_chars(word.data() + 1, word.data() + word.size(), t.var);
                    if (ec != std::errc() || p != word.data() + word.size()) {
                        throw ParseError("bad variable '" + std::string(word) + "'", pos);
                    }
                    out.push_back(t);
                } else if (auto op = op_from_symbol(word); op && is_unary(*op)) {
                    Token t{Tok::func, pos};
                    t.func = *op;
                    out.push_back(t);
                } else {
                    throw ParseError("unknown identifier '" + std::string(word) + "'", pos);
                }
                continue;
            }
            throw ParseError(std::string("unexpected character '") + c + "'", pos);
        }
    }

private:
    void skip_space() {
        while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
    }

    Token number(std::size_t pos) {
        std::size_t j = i_;
        while (j < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[j])) || text_[j] == '.')) ++j;
        if (j < text_.size() && (text_[j] == 'e' || text_[j] == 'E')) {
            std::size_t k = j + 1;
            if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
            if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
                j = k;
                while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
            }
        }
        Token t{Tok::number, pos};
        auto [p, ec] = std::from_chars(text_.data() + i_, text_.data() + j, t.number);
        if (ec != std::errc() || p != text_.data() + j) throw ParseError("malformed number", pos);
        i_ = j;
        return t;
    }

    std::string_view text_;
    std::size_t i_ = 0;
};

/// Builds prefix order directly: each rule returns the prefix node sequence of its subtree.
class Parser {
public:
    Parser(std::vector<Token> toks, std::size_t n_vars) : toks_(std::move(toks)), n_vars_(n_vars) {}

    std::vector<Node> parse_all() {
        auto out = expr();
        if (peek().kind != Tok::end) throw ParseError("unexpected token", peek().pos);
        return out;
    }

private:
    const Token& peek() const { return toks_[i_]; }
    const Token& next() { return toks_[i_++]; }

    static std::vector<Node> combine(Op op, std::vector<Node> lhs, std::vector<Node> rhs) {
        std::vector<Node> out;
        out.reserve(1 + lhs.size() + rhs.size());
        out.push_back(make_op(op));
        out.insert(out.end(), lhs.begin(), lhs.end());
        out.insert(out.end(), rhs.begin(), rhs.end());
        return out;
    }

    std::vector<Node> expr() {
        auto lhs = term();
        while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
            const Op op = next().kind == Tok::plus ? Op::add : Op::sub;
            lhs = combine(op, std::move(lhs), term());
        }
        return lhs;
    }

    std::vector<Node> term() {
        auto lhs = factor();
        while (peek().kind == Tok::star || peek().kind == Tok::slash) {
            const Op op = next().kind == Tok::star ? Op::mul : Op::div;
            lhs = combine(op, std::move(lhs), factor());
        }
        return lhs;
    }

    std::vector<Node> factor() {
        const Token& t = next();
        switch (t.kind) {
        case Tok::number:
            return {make_frozen_constant(t.number)};
        case Tok::open_c:
            return {make_open_constant()};
        case Tok::var:
            if (t.var >= n_vars_) {
                throw ParseError("variable x" + std::to_string(t.var) + " out of range (n_vars=" +
                                     std::to_string(n_vars_) + ")",
                                 t.pos);
            }
            return {make_var(t.var)};
        case Tok::func: {
            expect(Tok::lparen, "'(' after function name");
            auto arg = expr();
            expect(Tok::rparen, "')'");
            std::vector<Node> out;
            out.reserve(arg.size() + 1);
            out.push_back(make_op(t.func));
            out.insert(out.end(), arg.begin(), arg.end());
            return out;
        }
        case Tok::lparen: {
            auto inner = expr();
            expect(Tok::rparen, "')'");
            return inner;
        }
        case Tok::end:
            throw ParseError("unexpected end of input", t.pos);
        default:
            throw ParseError("expected an operand", t.pos);
        }
    }

    void expect(Tok kind, const char* what) {
        const Token& t = next();
        if (t.kind != kind) {
            if (t.kind == Tok::end) throw ParseError(std::string("unexpected end of input, expected ") + what, t.pos);
            throw ParseError(std::string("expected ") + what, t.pos);
        }
    }

    std::vector<Token> toks_;
    std::size_t n_vars_;
    std::size_t i_ = 0;
};

void print_infix(const ExpressionTree& tree, std::size_t i, std::span<const double> constants, std::size_t& slot,
                 bool substitute, std::string& out) {
    const Node& nd = tree.node(i);
    switch (arity(nd.op)) {
    case 2: {
        out += '(';
        print_infix(tree, i + 1, constants, slot, substitute, out);
        out += op_symbol(nd.op);
        print_infix(tree, tree.subtree_end(i + 1), constants, slot, substitute, out);
        out += ')';
        return;
    }
    case 1:
        out += op_symbol(nd.op);
        out += '(';
        print_infix(tree, i + 1, constants, slot, substitute, out);
        out += ')';
        return;
    default:
        break;
    }
    if (nd.op == Op::var) {
        out += 'x';
        out += std::to_string(nd.var);
    } else if (nd.value) {
        out += format_double(*nd.value);
    } else if (substitute) {
        out += format_double(constants[slot++]);
    } else {
        out += 'C';
    }
}

} // namespace

ExpressionTree parse(std::string_view text, std::size_t n_vars) {
    Lexer lexer(text);
    Parser parser(lexer.run(), n_vars);
    return ExpressionTree(parser.parse_all(), n_vars);
}

std::string to_string(const ExpressionTree& tree) {
    std::string out;
    std::size_t slot = 0;
    print_infix(tree, 0, {}, slot, false, out);
    return out;
}

std::string to_string(const ExpressionTree& tree, std::span<const double> constants) {
    if (constants.size() != count_open_constants(tree)) throw DimensionMismatch("constant vector length mismatch");
    std::string out;
    std::size_t slot = 0;
    print_infix(tree, 0, constants, slot, true, out);
    return out;
}

std::string to_prefix(const ExpressionTree& tree) {
    std::string out;
    for (const Node& nd : tree.nodes()) {
        if (!out.empty()) out += ' ';
        if (!nd.editable) out += '!';
        if (nd.op == Op::var) {
            out += 'x';
            out += std::to_string(nd.var);
        } else if (nd.op == Op::constant) {
            out += nd.value ? format_double(*nd.value) : std::string("C");
        } else {
            out += op_symbol(nd.op);
        }
    }
    return out;
}

std::size_t count_open_constants(const ExpressionTree& tree) {
    return static_cast<std::size_t>(
        std::count_if(tree.nodes().begin(), tree.nodes().end(), [](const Node& n) { return n.is_open_constant(); }));
}

VarSet free_variables(const ExpressionTree& tree) {
    VarSet s;
    for (const Node& nd : tree.nodes()) {
        if (nd.op == Op::var) s.insert(nd.var);
    }
    return s;
}

std::vector<double> evaluate(const ExpressionTree& tree, const Matrix& inputs, std::span<const double> constants) {
    BatchEvaluator ev(tree, inputs);
    auto root = ev.evaluate(constants);
    std::vector<double> out(root.begin(), root.end());
    for (double& v : out) {
        if (!std::isfinite(v)) v = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random trees

namespace {

void grow(const std::vector<std::uint32_t>& vars, const OperatorSet& ops, std::size_t depth, std::size_t max_depth,
          Rng& rng, std::vector<Node>& out) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const bool leaf = depth >= max_depth || u01(rng) < 0.5;
    if (leaf) {
        if (u01(rng) < 0.5) {
            std::uniform_int_distribution<std::size_t> pick(0, vars.size() - 1);
            out.push_back(make_var(vars[pick(rng)]));
        } else {
            out.push_back(make_open_constant());
        }
        return;
    }
    const std::size_t n_ops = ops.binary().size() + ops.unary().size();
    std::uniform_int_distribution<std::size_t> pick(0, n_ops - 1);
    const std::size_t k = pick(rng);
    if (k < ops.binary().size()) {
        out.push_back(make_op(ops.binary()[k]));
        grow(vars, ops, depth + 1, max_depth, rng, out);
        grow(vars, ops, depth + 1, max_depth, rng, out);
    } else {
        out.push_back(make_op(ops.unary()[k - ops.binary().size()]));
        grow(vars, ops, depth + 1, max_depth, rng, out);
    }
}

} // namespace

std::vector<Node> random_subtree(VarSet free_vars, const OperatorSet& ops, std::size_t max_depth, Rng& rng) {
    if (free_vars.empty()) throw std::invalid_argument("random_tree needs at least one free variable");
    if (max_depth < 1) throw std::invalid_argument("random_tree needs max_depth >= 1");
    std::vector<Node> out;
    grow(free_vars.members(), ops, 1, max_depth, rng, out);
    return out;
}

ExpressionTree random_tree(VarSet free_vars, const OperatorSet& ops, std::size_t max_depth, std::size_t n_vars,
                           Rng& rng) {
    return ExpressionTree(random_subtree(free_vars, ops, max_depth, rng), n_vars);
}

} // namespace racing_sr
