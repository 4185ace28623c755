#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "mixcon/error.hpp"
#include "mixcon/hardness.hpp"
#include "mixcon/rng.hpp"

namespace mixcon {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

long long parse_int(const std::string& tok, std::size_t line) {
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw FormatError("line " + std::to_string(line) + ": '" + tok + "' is not an integer", line);
    }
    return v;
}

}  // namespace

std::size_t CnfFormula::B() const {
    std::vector<std::size_t> count(n + 1, 0);
    for (const auto& c : clauses) {
        for (int lit : c) {
            const auto v = static_cast<std::size_t>(std::abs(lit));
            if (v < count.size()) ++count[v];
        }
    }
    return count.empty() ? 0 : *std::max_element(count.begin(), count.end());
}

void validate(const CnfFormula& phi) {
    for (std::size_t j = 0; j < phi.clauses.size(); ++j) {
        const auto& c = phi.clauses[j];
        std::set<int> vars;
        for (int lit : c) {
            const int v = std::abs(lit);
            if (lit == 0 || static_cast<std::size_t>(v) > phi.n) {
                throw ContractError("clause " + std::to_string(j) + " has literal " + std::to_string(lit) +
                                    " outside 1.." + std::to_string(phi.n));
            }
            if (!vars.insert(v).second) {
                throw ContractError("clause " + std::to_string(j) + " repeats variable " + std::to_string(v));
            }
        }
    }
}

CnfFormula parse_dimacs(const std::string& text) {
    std::istringstream in(text);
    CnfFormula phi;
    bool have_header = false;
    std::size_t declared = 0;
    std::vector<int> pending;
    std::size_t pending_line = 0;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto toks = split_ws(line);
        if (toks.empty() || toks[0] == "c" || toks[0][0] == 'c') continue;
        if (toks[0] == "%") break;  // trailer used by some benchmark sets
        if (toks[0] == "p") {
            if (have_header) throw FormatError("line " + std::to_string(line_no) + ": second header", line_no);
            if (toks.size() != 4 || toks[1] != "cnf") {
                throw FormatError("line " + std::to_string(line_no) + ": expected 'p cnf <vars> <clauses>'", line_no);
            }
            const long long n = parse_int(toks[2], line_no);
            const long long m = parse_int(toks[3], line_no);
            if (n < 0 || m < 0) throw FormatError("line " + std::to_string(line_no) + ": negative count", line_no);
            phi.n = static_cast<std::size_t>(n);
            declared = static_cast<std::size_t>(m);
            have_header = true;
            continue;
        }
        if (!have_header) throw FormatError("line " + std::to_string(line_no) + ": clause before header", line_no);
        for (const auto& tok : toks) {
            const long long lit = parse_int(tok, line_no);
            if (pending.empty()) pending_line = line_no;
            if (lit != 0) {
                if (static_cast<std::size_t>(std::llabs(lit)) > phi.n) {
                    throw FormatError("line " + std::to_string(line_no) + ": literal " + tok + " exceeds " +
                                          std::to_string(phi.n) + " variables",
                                      line_no);
                }
                pending.push_back(static_cast<int>(lit));
                continue;
            }
            if (pending.size() != 3) {
                throw FormatError("line " + std::to_string(pending_line) + ": clause has " +
                                      std::to_string(pending.size()) + " literals, expected 3",
                                  pending_line);
            }
            std::set<int> vars;
            for (int l : pending) {
                if (!vars.insert(std::abs(l)).second) {
                    throw FormatError("line " + std::to_string(pending_line) + ": clause repeats variable " +
                                          std::to_string(std::abs(l)),
                                      pending_line);
                }
            }
            phi.clauses.push_back({pending[0], pending[1], pending[2]});
            pending.clear();
        }
    }
    if (!have_header) throw FormatError("missing 'p cnf' header", line_no);
    if (!pending.empty()) {
        throw FormatError("line " + std::to_string(pending_line) + ": clause not terminated by 0", pending_line);
    }
    if (phi.clauses.size() != declared) {
        throw FormatError("header declares " + std::to_string(declared) + " clauses, found " +
                              std::to_string(phi.clauses.size()),
                          line_no);
    }
    return phi;
}

CnfFormula load_dimacs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_dimacs(text.str());
}

std::string to_dimacs(const CnfFormula& phi) {
    std::string out = "p cnf " + std::to_string(phi.n) + " " + std::to_string(phi.m()) + "\n";
    for (const auto& c : phi.clauses) {
        out += std::to_string(c[0]) + " " + std::to_string(c[1]) + " " + std::to_string(c[2]) + " 0\n";
    }
    return out;
}

CnfFormula random_3cnf(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (n < 3) throw ConfigError("random 3-CNF needs at least 3 variables");
    Rng rng(seed);
    CnfFormula phi{n, {}};
    for (std::size_t j = 0; j < m; ++j) {
        std::array<int, 3> c{};
        for (std::size_t k = 0; k < 3;) {
            const int v = static_cast<int>(rng.below(n)) + 1;
            if (std::find_if(c.begin(), c.begin() + k, [v](int l) { return std::abs(l) == v; }) != c.begin() + k) {
                continue;
            }
            c[k++] = rng.below(2) == 0 ? v : -v;
        }
        phi.clauses.push_back(c);
    }
    return phi;
}

}  // namespace mixcon
