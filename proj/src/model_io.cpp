#include "cpzrepair/model_io.hpp"

#include <json.hpp>

#include <cctype>
#include <istream>
#include <ostream>
#include <set>

namespace cpzrepair {

namespace {

using json = nlohmann::ordered_json;

// Top-level items of a parenthesised list, as raw substrings.
std::vector<std::string> split_list(const std::string& text, std::size_t& i)
{
    auto skip = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    skip();
    if (i >= text.size() || text[i] != '(') throw ModelFormatError("expected '(' at offset " + std::to_string(i));
    ++i;
    std::vector<std::string> items;
    for (;;) {
        skip();
        if (i >= text.size()) throw ModelFormatError("missing ')'");
        if (text[i] == ')') {
            ++i;
            return items;
        }
        const std::size_t start = i;
        if (text[i] == '(') {
            int depth = 0;
            do {
                if (text[i] == '(') ++depth;
                if (text[i] == ')') --depth;
                ++i;
            } while (i < text.size() && depth > 0);
            if (depth != 0) throw ModelFormatError("missing ')'");
        } else {
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '(' &&
                   text[i] != ')')
                ++i;
        }
        items.push_back(text.substr(start, i - start));
    }
}

std::vector<std::string> split_list(const std::string& text)
{
    std::size_t i = 0;
    auto items = split_list(text, i);
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i != text.size()) throw ModelFormatError("trailing input after ')'");
    return items;
}

ParamKind kind_from(const std::string& s)
{
    if (s == "object") return ParamKind::ObjectRef;
    if (s == "robot") return ParamKind::RobotRef;
    if (s == "symbol") return ParamKind::SymbolRef;
    throw ModelFormatError("unknown parameter kind '" + s + "'");
}

const char* kind_name(ParamKind k)
{
    switch (k) {
    case ParamKind::ObjectRef: return "object";
    case ParamKind::RobotRef: return "robot";
    case ParamKind::SymbolRef: return "symbol";
    default: return "?";
    }
}

}  // namespace

ActionModel parse_model(const std::string& text, const TemplateRegistry& registry, const StateSpace* space)
{
    const auto items = split_list(text);
    if (items.size() < 2 || items[0] != "action") throw ModelFormatError("expected (action <name> ...)");
    ActionModel m;
    m.name = items[1];
    if (m.name.front() == '(') throw ModelFormatError("action name must be a token");
    bool has_constraint = false, has_effect = false, has_params = false;
    for (std::size_t k = 2; k < items.size(); ++k) {
        if (items[k].front() != '(') throw ModelFormatError("unexpected token '" + items[k] + "'");
        std::size_t i = 0;
        const auto section = split_list(items[k], i);
        if (section.empty()) throw ModelFormatError("empty section");
        const std::string& head = section[0];
        if (head == "params") {
            if (has_params) throw ModelFormatError("duplicate params section");
            has_params = true;
            for (std::size_t j = 1; j < section.size(); ++j) {
                if (section[j].front() != '(') throw ModelFormatError("parameter must be (name kind)");
                const auto p = split_list(section[j]);
                if (p.size() != 2) throw ModelFormatError("parameter must be (name kind)");
                m.params.push_back({p[0], kind_from(p[1])});
            }
        } else if (head == "constraint" || head == "effect") {
            if (section.size() != 2) throw ModelFormatError("'" + head + "' takes one formula");
            Formula f = parse_formula(section[1], registry, space);
            if (head == "constraint") {
                if (has_constraint) throw ModelFormatError("duplicate constraint");
                has_constraint = true;
                m.constraint = std::move(f);
            } else {
                if (has_effect) throw ModelFormatError("duplicate effect");
                has_effect = true;
                m.effect = std::move(f);
            }
        } else {
            throw ModelFormatError("unknown section '" + head + "'");
        }
    }
    if (!has_constraint || !has_effect) throw ModelFormatError("action needs a constraint and an effect");
    return m;
}

std::string print_model(const ActionModel& m)
{
    std::string out = "(action " + m.name + "\n  (params";
    for (const auto& p : m.params) out += std::string(" (") + p.name + " " + kind_name(p.kind) + ")";
    out += ")\n  (constraint " + print_formula(m.constraint) + ")\n  (effect " + print_formula(m.effect) + "))\n";
    return out;
}

void validate_model(const ActionModel& m, const EvalContext& ctx)
{
    std::set<std::string> names;
    for (const auto& p : m.params)
        if (!names.insert(p.name).second) throw std::invalid_argument("duplicate parameter '" + p.name + "'");
    validate_formula(m.constraint, ctx);
    validate_formula(m.effect, ctx);
}

std::string observation_to_json(const StateSpace& space, const Observation& h)
{
    json j;
    j["action"] = h.action;
    j["q"] = json::parse(state_to_json(space, h.q));
    json theta = json::object();
    for (const auto& [k, v] : h.theta) theta[k] = v;
    j["theta"] = theta;
    j["q_next"] = json::parse(state_to_json(space, h.q_next));
    j["timestamp"] = h.timestamp;
    return j.dump();
}

Observation observation_from_json(const StateSpace& space, const std::string& line)
{
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed observation: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("observation must be a JSON object");
    for (const char* key : {"action", "q", "theta", "q_next"})
        if (!j.contains(key)) throw std::invalid_argument(std::string("observation lacks '") + key + "'");
    Observation h;
    try {
        h.action = j.at("action").get<std::string>();
        h.q = state_from_json(space, j.at("q").dump());
        h.q_next = state_from_json(space, j.at("q_next").dump());
        for (const auto& [k, v] : j.at("theta").items()) h.theta[k] = v.get<std::string>();
        if (j.contains("timestamp")) h.timestamp = j.at("timestamp").get<double>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed observation: ") + e.what());
    }
    return h;
}

std::vector<Observation> read_observation_log(const StateSpace& space, std::istream& in)
{
    std::vector<Observation> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(observation_from_json(space, line));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void write_observation_log(const StateSpace& space, std::ostream& out, const std::vector<Observation>& obs)
{
    for (const auto& h : obs) out << observation_to_json(space, h) << '\n';
}

}  // namespace cpzrepair
