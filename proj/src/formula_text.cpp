#include "cpzrepair/predicates.hpp"
#include "cpzrepair/text_util.hpp"

#include <cctype>

namespace cpzrepair {

FormulaSyntaxError::FormulaSyntaxError(const std::string& what, std::size_t pos)
    : std::invalid_argument(what + " (at offset " + std::to_string(pos) + ")"), pos_(pos)
{
}

namespace {

struct Node
{
    std::size_t pos = 0;
    std::string atom;  // non-empty for a bare token
    std::vector<Node> list;
    bool is_list = false;
};

class Reader
{
public:
    explicit Reader(const std::string& text) : s_(text) {}

    Node read()
    {
        skip();
        if (i_ >= s_.size()) throw FormulaSyntaxError("unexpected end of input", i_);
        Node n;
        n.pos = i_;
        if (s_[i_] == '(') {
            ++i_;
            n.is_list = true;
            for (;;) {
                skip();
                if (i_ >= s_.size()) throw FormulaSyntaxError("missing ')'", n.pos);
                if (s_[i_] == ')') {
                    ++i_;
                    break;
                }
                n.list.push_back(read());
            }
            return n;
        }
        if (s_[i_] == ')') throw FormulaSyntaxError("unexpected ')'", i_);
        const std::size_t start = i_;
        while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' && s_[i_] != ')')
            ++i_;
        n.atom = s_.substr(start, i_ - start);
        return n;
    }

    void expect_end()
    {
        skip();
        if (i_ < s_.size()) throw FormulaSyntaxError("trailing input", i_);
    }

private:
    void skip()
    {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    const std::string& s_;
    std::size_t i_ = 0;
};

class Builder
{
public:
    Builder(const TemplateRegistry& reg, const StateSpace* space) : reg_(reg), space_(space) {}

    Formula formula(const Node& n)
    {
        Formula f;
        if (head(n) == "or") {
            if (n.list.size() < 2) throw FormulaSyntaxError("'or' needs at least one operand", n.pos);
            for (std::size_t i = 1; i < n.list.size(); ++i) f.disjuncts.push_back(conjunct(n.list[i]));
        } else {
            f.disjuncts.push_back(conjunct(n));
        }
        return f;
    }

private:
    static std::string head(const Node& n)
    {
        if (!n.is_list || n.list.empty() || n.list[0].is_list) return {};
        return n.list[0].atom;
    }

    std::vector<Atom> conjunct(const Node& n)
    {
        const std::string h = head(n);
        if (h == "or") throw FormulaSyntaxError("'or' is only allowed at the top level (DNF)", n.pos);
        if (h != "and") return {literal(n)};
        if (n.list.size() < 2) throw FormulaSyntaxError("'and' needs at least one operand", n.pos);
        std::vector<Atom> out;
        for (std::size_t i = 1; i < n.list.size(); ++i) {
            const std::string hi = head(n.list[i]);
            if (hi == "and" || hi == "or")
                throw FormulaSyntaxError("'" + hi + "' cannot appear inside 'and' (DNF)", n.list[i].pos);
            out.push_back(literal(n.list[i]));
        }
        return out;
    }

    Atom literal(const Node& n)
    {
        if (head(n) != "not") return atom(n);
        if (n.list.size() != 2) throw FormulaSyntaxError("'not' takes exactly one atom", n.pos);
        const std::string inner = head(n.list[1]);
        if (inner == "and" || inner == "or" || inner == "not")
            throw FormulaSyntaxError("'not' applies to atoms only", n.list[1].pos);
        const Atom a = atom(n.list[1]);
        auto c = reg_.at(a.predicate).complement(a, space_);
        if (!c) throw FormulaSyntaxError("'" + a.predicate + "' atom has no registered complement", n.pos);
        return *c;
    }

    Atom atom(const Node& n)
    {
        if (!n.is_list) throw FormulaSyntaxError("expected '(' before '" + n.atom + "'", n.pos);
        const std::string h = head(n);
        if (h.empty()) throw FormulaSyntaxError("expected a predicate name", n.pos);
        const auto* t = reg_.find(h);
        if (!t) throw FormulaSyntaxError("unknown predicate '" + h + "'", n.list[0].pos);
        const auto& spec = t->params();
        if (n.list.size() - 1 != spec.size())
            throw FormulaSyntaxError("'" + h + "' takes " + std::to_string(spec.size()) + " arguments", n.pos);
        Atom a{h, {}};
        for (std::size_t i = 0; i < spec.size(); ++i) {
            const Node& arg = n.list[i + 1];
            if (arg.is_list) throw FormulaSyntaxError("argument must be a token", arg.pos);
            if (spec[i].kind == ParamKind::Continuous) {
                try {
                    a.args.push_back(Arg::number(parse_double(arg.atom)));
                } catch (const std::invalid_argument&) {
                    throw FormulaSyntaxError("expected a number for '" + spec[i].name + "'", arg.pos);
                }
            } else {
                a.args.push_back(Arg::ref(arg.atom));
            }
        }
        return a;
    }

    const TemplateRegistry& reg_;
    const StateSpace* space_;
};

}  // namespace

Formula parse_formula(const std::string& text, const TemplateRegistry& registry, const StateSpace* space)
{
    Reader r(text);
    Node n = r.read();
    r.expect_end();
    return Builder(registry, space).formula(n);
}

std::string print_atom(const Atom& a)
{
    std::string out = "(" + a.predicate;
    for (const auto& arg : a.args) out += " " + (arg.text.empty() ? format_double(arg.value) : arg.text);
    return out + ")";
}

std::string print_formula(const Formula& f)
{
    auto conj = [](const std::vector<Atom>& c) {
        if (c.size() == 1) return print_atom(c[0]);
        std::string out = "(and";
        for (const auto& a : c) out += " " + print_atom(a);
        return out + ")";
    };
    if (f.disjuncts.size() == 1) return conj(f.disjuncts[0]);
    std::string out = "(or";
    for (const auto& c : f.disjuncts) out += " " + conj(c);
    return out + ")";
}

}  // namespace cpzrepair
