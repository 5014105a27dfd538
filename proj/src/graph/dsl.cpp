#include "ivf/graph/dsl.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "ivf/error.hpp"

namespace ivf::graph {

namespace {

std::vector<std::string> tokenize(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
    throw GraphError("line " + std::to_string(line_no) + ": " + msg);
}

} // namespace

Dag parse_graph(std::string_view text) {
    DagBuilder builder;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto tok = tokenize(line);
        if (tok.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (tok[0] == "node") {
            if (tok.size() < 2 || tok.size() > 3) fail(line_no, "expected 'node <name> [role=<role>]'");
            Role role = Role::other;
            if (tok.size() == 3) {
                if (tok[2].rfind("role=", 0) != 0) fail(line_no, "expected role=<role>, got '" + tok[2] + "'");
                auto parsed = parse_role(std::string_view(tok[2]).substr(5));
                if (!parsed) fail(line_no, "unknown role '" + tok[2].substr(5) + "'");
                role = *parsed;
            }
            builder.node(tok[1], role);
        } else if (tok[0] == "edge") {
            if (tok.size() < 4 || tok.size() > 5 || tok[2] != "->")
                fail(line_no, "expected 'edge <from> -> <to> [suspect]'");
            bool suspect = false;
            if (tok.size() == 5) {
                if (tok[4] != "suspect") fail(line_no, "unexpected token '" + tok[4] + "'");
                suspect = true;
            }
            builder.edge(tok[1], tok[3], suspect);
        } else {
            fail(line_no, "unknown directive '" + tok[0] + "'");
        }
        if (end == text.size()) break;
    }
    return builder.build();
}

Dag load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_graph(buf.str());
}

std::string format_graph(const Dag& g) {
    std::string out;
    for (const auto& v : g.nodes()) {
        out += "node " + v.name;
        if (v.role != Role::other) out += " role=" + std::string(to_string(v.role));
        out += '\n';
    }
    for (const auto& e : g.edges()) {
        out += "edge " + g.name(e.from) + " -> " + g.name(e.to);
        if (e.suspect) out += " suspect";
        out += '\n';
    }
    return out;
}

} // namespace ivf::graph
