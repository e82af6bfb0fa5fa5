#pragma once

// Configuration snapshot files:
//
//   popmaj-config v1 n=<n>
//   input,role,leader,resetcount,waitcount,rank,childmask,answer,timer
//   ... one line per agent ...
//
// input is A|B, role Resetting|Settled|Unsettled, leader L|F, childmask an
// integer in [0,3] (bit 0 = left child handed out), answer Phi|T|A|B.

#include "popmaj/types.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace popmaj::snapshot {

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string format_agent(Input x, const AgentState& s) {
    std::string out;
    out.reserve(48);
    out += to_string(x);
    out += ',';
    out += to_string(s.role);
    out += ',';
    out += to_string(s.leader);
    out += ',' + std::to_string(s.resetcount) + ',' + std::to_string(s.waitcount) + ',' + std::to_string(s.rank) +
           ',' + std::to_string(static_cast<unsigned>(s.childmask)) + ',';
    out += to_string(s.answer);
    out += ',' + std::to_string(s.timer);
    return out;
}

namespace detail {

inline std::uint32_t parse_uint(std::string_view field, const char* what) {
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(std::string("bad ") + what + ": '" + std::string(field) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace detail

inline std::pair<Input, AgentState> parse_agent(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    const auto f = detail::split(line, ',');
    if (f.size() != 9) throw ParseError("agent line needs 9 fields: '" + std::string(line) + "'");

    Input x;
    if (f[0] == "A")
        x = Input::A;
    else if (f[0] == "B")
        x = Input::B;
    else
        throw ParseError("bad input '" + std::string(f[0]) + "'");

    AgentState s;
    if (f[1] == "Resetting")
        s.role = Role::Resetting;
    else if (f[1] == "Settled")
        s.role = Role::Settled;
    else if (f[1] == "Unsettled")
        s.role = Role::Unsettled;
    else
        throw ParseError("bad role '" + std::string(f[1]) + "'");

    if (f[2] == "L")
        s.leader = Leader::L;
    else if (f[2] == "F")
        s.leader = Leader::F;
    else
        throw ParseError("bad leader '" + std::string(f[2]) + "'");

    s.resetcount = detail::parse_uint(f[3], "resetcount");
    s.waitcount = detail::parse_uint(f[4], "waitcount");
    s.rank = detail::parse_uint(f[5], "rank");
    const std::uint32_t mask = detail::parse_uint(f[6], "childmask");
    if (mask > 3) throw ParseError("childmask out of range");
    s.childmask = static_cast<std::uint8_t>(mask);

    if (f[7] == "Phi")
        s.answer = Answer::Phi;
    else if (f[7] == "T")
        s.answer = Answer::T;
    else if (f[7] == "A")
        s.answer = Answer::A;
    else if (f[7] == "B")
        s.answer = Answer::B;
    else
        throw ParseError("bad answer '" + std::string(f[7]) + "'");

    s.timer = detail::parse_uint(f[8], "timer");
    return {x, s};
}

inline void write(std::ostream& os, const Configuration& c) {
    os << "popmaj-config v1 n=" << c.size() << '\n';
    for (std::size_t i = 0; i < c.size(); ++i) os << format_agent(c.input(i), c.state(i)) << '\n';
}

inline std::string to_string(const Configuration& c) {
    std::ostringstream os;
    write(os, c);
    return os.str();
}

/// Reads a snapshot. Ranges are checked against `p` when given.
inline Configuration read(std::istream& is, const Params* p = nullptr) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty snapshot");
    while (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string prefix = "popmaj-config v1 n=";
    if (line.rfind(prefix, 0) != 0) throw ParseError("missing 'popmaj-config v1' header");
    const std::uint32_t n = detail::parse_uint(std::string_view(line).substr(prefix.size()), "n");

    std::vector<Input> inputs;
    std::vector<AgentState> states;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto [x, s] = parse_agent(line);
        inputs.push_back(x);
        states.push_back(s);
    }
    if (states.size() != n)
        throw ParseError("header says n=" + std::to_string(n) + " but found " + std::to_string(states.size()) +
                         " agents");
    Configuration c(std::move(inputs), std::move(states));
    if (p) c.validate(*p);
    return c;
}

inline Configuration load(const std::string& path, const Params* p = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read(in, p);
}

inline void save(const std::string& path, const Configuration& c) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write(out, c);
}

} // namespace popmaj::snapshot
