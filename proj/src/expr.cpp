#include "thermo/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "thermo/error.hpp"

namespace thermo {

// ---------------------------------------------------------------------------
// Slot

std::string Slot::key() const {
    std::string out = variable;
    if (role > 0) {
        out += "_" + std::to_string(role);
    }
    return out + "@" + concept_name;
}

Slot Slot::from_key(std::string_view key) {
    const auto at = key.find('@');
    if (at == std::string_view::npos || at == 0 || at + 1 == key.size()) {
        throw Error(ErrorCode::ParseError, "malformed slot token '" + std::string(key) + "'");
    }
    Slot slot;
    std::string var(key.substr(0, at));
    slot.concept_name = std::string(key.substr(at + 1));
    const auto underscore = var.rfind('_');
    if (underscore != std::string::npos && underscore + 1 < var.size() && underscore > 0) {
        const std::string_view suffix(var.data() + underscore + 1, var.size() - underscore - 1);
        int role = 0;
        auto [ptr, ec] = std::from_chars(suffix.data(), suffix.data() + suffix.size(), role);
        if (ec == std::errc() && ptr == suffix.data() + suffix.size() && role > 0) {
            slot.role = role;
            var.resize(underscore);
        }
    }
    slot.variable = std::move(var);
    return slot;
}

// ---------------------------------------------------------------------------
// Expr nodes

struct Expr::Node {
    Op op = Op::Constant;
    double value = 0.0;
    Slot slot;
    std::vector<Expr> children;
};

Expr Expr::constant(double value) {
    auto node = std::make_shared<Node>();
    node->op = Op::Constant;
    node->value = value;
    return Expr(std::move(node));
}

Expr Expr::slot(Slot slot) {
    auto node = std::make_shared<Node>();
    node->op = Op::Slot;
    node->slot = std::move(slot);
    return Expr(std::move(node));
}

Expr Expr::unary(Op op, Expr operand) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->children.push_back(std::move(operand));
    return Expr(std::move(node));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->children.push_back(std::move(lhs));
    node->children.push_back(std::move(rhs));
    return Expr(std::move(node));
}

Expr::Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
const Slot& Expr::slot() const { return node_->slot; }
std::span<const Expr> Expr::children() const { return node_->children; }

namespace {

void collect_slots(const Expr& e, std::map<std::string, Slot>& out) {
    if (e.op() == Expr::Op::Slot) {
        out.emplace(e.slot().key(), e.slot());
        return;
    }
    for (const auto& child : e.children()) {
        collect_slots(child, out);
    }
}

int precedence(Expr::Op op) {
    switch (op) {
        case Expr::Op::Add:
        case Expr::Op::Sub: return 1;
        case Expr::Op::Mul:
        case Expr::Op::Div: return 2;
        case Expr::Op::Neg: return 3;
        case Expr::Op::Pow: return 4;
        default: return 5;
    }
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, ptr);
    return v < 0 ? "(" + s + ")" : s;
}

std::string render(const Expr& e, const std::function<std::string(const Slot&)>& name_of) {
    using Op = Expr::Op;
    auto wrap = [&](const Expr& child, bool parens) {
        auto text = render(child, name_of);
        return parens ? "(" + text + ")" : text;
    };
    const int prec = precedence(e.op());
    switch (e.op()) {
        case Op::Constant: return format_number(e.value());
        case Op::Slot: return name_of(e.slot());
        case Op::Ln: return "ln(" + render(e.children()[0], name_of) + ")";
        case Op::Neg: {
            const auto& c = e.children()[0];
            return "-" + wrap(c, precedence(c.op()) < prec);
        }
        case Op::Pow: {
            const auto& a = e.children()[0];
            const auto& b = e.children()[1];
            return wrap(a, precedence(a.op()) <= prec) + "^" + wrap(b, precedence(b.op()) < prec);
        }
        default: {
            const auto& a = e.children()[0];
            const auto& b = e.children()[1];
            const char* sym = e.op() == Op::Add ? " + " : e.op() == Op::Sub ? " - " : e.op() == Op::Mul ? " * " : " / ";
            return wrap(a, precedence(a.op()) < prec) + sym + wrap(b, precedence(b.op()) <= prec);
        }
    }
}

}  // namespace

std::vector<Slot> Expr::slots() const {
    std::map<std::string, Slot> found;
    collect_slots(*this, found);
    std::vector<Slot> out;
    out.reserve(found.size());
    for (auto& [key, slot] : found) {
        out.push_back(slot);
    }
    return out;
}

std::size_t Expr::occurrences(const std::string& slot_key) const {
    if (op() == Op::Slot) {
        return slot().key() == slot_key ? 1 : 0;
    }
    std::size_t n = 0;
    for (const auto& child : children()) {
        n += child.occurrences(slot_key);
    }
    return n;
}

std::string Expr::to_string() const {
    return render(*this, [](const Slot& s) { return s.key(); });
}

std::string Expr::to_string(const std::function<std::string(const Slot&)>& name_of) const {
    return render(*this, name_of);
}

bool Expr::operator==(const Expr& other) const {
    if (node_ == other.node_) {
        return true;
    }
    if (op() != other.op()) {
        return false;
    }
    switch (op()) {
        case Op::Constant: return value() == other.value();
        case Op::Slot: return slot() == other.slot();
        default: break;
    }
    const auto a = children();
    const auto b = other.children();
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] == b[i])) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr parse() {
        auto e = parse_sum();
        skip_space();
        if (pos_ != text_.size()) {
            fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        }
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::ParseError,
                    "expression parse error at position " + std::to_string(pos_ + 1) + ": " + what + " in \"" +
                        std::string(text_) + "\"",
                    {std::to_string(pos_ + 1)});
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_sum() {
        auto lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = Expr::binary(Expr::Op::Add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = Expr::binary(Expr::Op::Sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_product() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = Expr::binary(Expr::Op::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = Expr::binary(Expr::Op::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary() {
        if (accept('-')) {
            return Expr::unary(Expr::Op::Neg, parse_unary());
        }
        return parse_power();
    }

    Expr parse_power() {
        auto base = parse_primary();
        if (accept('^')) {
            return Expr::binary(Expr::Op::Pow, base, parse_unary());
        }
        return base;
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    std::string identifier() {
        const auto start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    Expr parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("unexpected end of expression");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_sum();
            if (!accept(')')) {
                fail("expected ')'");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (ident_start(c)) {
            const auto start = pos_;
            auto name = identifier();
            if (pos_ < text_.size() && text_[pos_] == '@') {
                ++pos_;
                if (pos_ >= text_.size() || !ident_start(text_[pos_])) {
                    fail("expected concept name after '@'");
                }
                auto concept_name = identifier();
                return Expr::slot(Slot::from_key(name + "@" + concept_name));
            }
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == '(') {
                if (name != "ln") {
                    pos_ = start;
                    throw Error(ErrorCode::UnknownFunction,
                                "unknown function '" + name + "' at position " + std::to_string(start + 1), {name});
                }
                ++pos_;
                auto arg = parse_sum();
                if (!accept(')')) {
                    fail("expected ')' after function argument");
                }
                return Expr::unary(Expr::Op::Ln, arg);
            }
            pos_ = start;
            fail("bare identifier '" + name + "' (slots are written var@Concept)");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expr parse_number() {
        const auto start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            auto probe = pos_ + 1;
            if (probe < text_.size() && (text_[probe] == '+' || text_[probe] == '-')) {
                ++probe;
            }
            if (probe < text_.size() && std::isdigit(static_cast<unsigned char>(text_[probe]))) {
                pos_ = probe;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    ++pos_;
                }
            }
        }
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) {
            pos_ = start;
            fail("malformed number");
        }
        return Expr::constant(value);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

[[noreturn]] void domain_error(const Expr& at, const std::string& what) {
    throw Error(ErrorCode::DomainError, what + " in '" + at.to_string() + "'", {at.to_string()});
}

double pow_checked(const Expr& at, double base, double exponent) {
    if (base == 0.0 && exponent < 0.0) {
        domain_error(at, "zero raised to a negative power");
    }
    const double r = std::pow(base, exponent);
    if (std::isnan(r)) {
        domain_error(at, "negative base with non-integer exponent");
    }
    return r;
}

}  // namespace

double evaluate(const Expr& e, const SlotLookup& lookup) {
    using Op = Expr::Op;
    switch (e.op()) {
        case Op::Constant: return e.value();
        case Op::Slot: return lookup(e.slot());
        case Op::Neg: return -evaluate(e.children()[0], lookup);
        case Op::Ln: {
            const double a = evaluate(e.children()[0], lookup);
            if (!(a > 0.0)) {
                domain_error(e, "logarithm of non-positive value");
            }
            return std::log(a);
        }
        default: break;
    }
    const double a = evaluate(e.children()[0], lookup);
    const double b = evaluate(e.children()[1], lookup);
    switch (e.op()) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div:
            if (b == 0.0) {
                domain_error(e, "division by zero");
            }
            return a / b;
        case Op::Pow: return pow_checked(e, a, b);
        default: break;
    }
    return 0.0;
}

double evaluate(const Expr& expr, const Binding& binding, const Valuation& valuation) {
    return evaluate(expr, [&](const Slot& slot) {
        const auto key = slot.key();
        const auto b = binding.find(key);
        if (b == binding.end()) {
            throw Error(ErrorCode::MissingValue, "slot " + key + " is not bound", {key});
        }
        const auto v = valuation.find(b->second);
        if (v == valuation.end()) {
            throw Error(ErrorCode::MissingValue, "no value for " + b->second, {b->second});
        }
        return v->second;
    });
}

Dual evaluate_dual(const Expr& e, const SlotLookup& lookup, const std::string& wrt_key) {
    using Op = Expr::Op;
    switch (e.op()) {
        case Op::Constant: return {e.value(), 0.0};
        case Op::Slot: return {lookup(e.slot()), e.slot().key() == wrt_key ? 1.0 : 0.0};
        case Op::Neg: {
            auto a = evaluate_dual(e.children()[0], lookup, wrt_key);
            return {-a.value, -a.derivative};
        }
        case Op::Ln: {
            auto a = evaluate_dual(e.children()[0], lookup, wrt_key);
            if (!(a.value > 0.0)) {
                domain_error(e, "logarithm of non-positive value");
            }
            return {std::log(a.value), a.derivative / a.value};
        }
        default: break;
    }
    const auto a = evaluate_dual(e.children()[0], lookup, wrt_key);
    const auto b = evaluate_dual(e.children()[1], lookup, wrt_key);
    switch (e.op()) {
        case Op::Add: return {a.value + b.value, a.derivative + b.derivative};
        case Op::Sub: return {a.value - b.value, a.derivative - b.derivative};
        case Op::Mul: return {a.value * b.value, a.derivative * b.value + a.value * b.derivative};
        case Op::Div:
            if (b.value == 0.0) {
                domain_error(e, "division by zero");
            }
            return {a.value / b.value, (a.derivative * b.value - a.value * b.derivative) / (b.value * b.value)};
        case Op::Pow: {
            const double v = pow_checked(e, a.value, b.value);
            double d = 0.0;
            if (a.derivative != 0.0) {
                d += b.value * pow_checked(e, a.value, b.value - 1.0) * a.derivative;
            }
            if (b.derivative != 0.0) {
                if (!(a.value > 0.0)) {
                    domain_error(e, "variable exponent on non-positive base");
                }
                d += v * std::log(a.value) * b.derivative;
            }
            return {v, d};
        }
        default: break;
    }
    return {0.0, 0.0};
}

}  // namespace thermo
