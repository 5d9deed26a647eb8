// kfree: command line front end for the library.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kfree/entropy.hpp"
#include "kfree/linmaps.hpp"
#include "kfree/localglobal.hpp"
#include "kfree/shiftspace.hpp"
#include "kfree/sieve.hpp"

using namespace kfree;
using json = nlohmann::ordered_json;

namespace {

struct FileNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Top-level split on sep, ignoring separators inside [...].
std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

// Accepts the path as given or with the default extension appended.
std::string resolve(const std::string& path, const std::string& ext) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(path)) return path;
    if (fs::is_regular_file(path + ext)) return path + ext;
    throw FileNotFound(path);
}

// Lines with comments and blanks removed, split into keyword and rest.
std::vector<std::pair<std::string, std::string>> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto sp = line.find(' ');
        if (sp == std::string::npos) out.emplace_back(line, "");
        else out.emplace_back(line.substr(0, sp), trim(line.substr(sp + 1)));
    }
    return out;
}

std::vector<Elem> parse_elems(const EtaleAlgebra& K, const std::string& text) {
    std::vector<Elem> out;
    if (trim(text).empty()) return out;
    for (auto& item : split(text, ',')) out.push_back(parse_elem(K, item));
    return out;
}

std::vector<i64> parse_ints(const std::string& text) {
    std::vector<i64> out;
    if (trim(text).empty()) return out;
    for (auto& item : split(text, ',')) {
        try {
            size_t used = 0;
            out.push_back(std::stoll(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Usage("not an integer: '" + item + "'");
        }
    }
    return out;
}

struct PatternFile {
    EtaleAlgebra K;
    Pattern X;
    std::optional<Box> known;
};

std::optional<Box> parse_box(const EtaleAlgebra& K, const std::string& text) {
    auto dots = text.find("..");
    if (dots == std::string::npos) throw Error(ErrorKind::Parse, "box needs 'lo .. hi': " + text);
    return Box{parse_elem(K, trim(text.substr(0, dots))), parse_elem(K, trim(text.substr(dots + 2)))};
}

PatternFile load_pattern(const std::string& path) {
    PatternFile f;
    bool have_algebra = false;
    std::vector<Elem> pts;
    for (auto& [key, rest] : read_records(path)) {
        if (key == "algebra") {
            f.K = parse_algebra(rest);
            have_algebra = true;
        } else if (!have_algebra) {
            throw Error(ErrorKind::Parse, path + ": 'algebra' must come first");
        } else if (key == "points") {
            for (auto& x : parse_elems(f.K, rest)) pts.push_back(x);
        } else if (key == "known") {
            f.known = parse_box(f.K, rest);
        } else {
            throw Error(ErrorKind::Parse, path + ": unknown keyword '" + key + "'");
        }
    }
    if (!have_algebra) throw Error(ErrorKind::Parse, path + ": missing 'algebra'");
    f.X = make_pattern(pts);
    return f;
}

WindowCode load_code(const std::string& path) {
    std::optional<EtaleAlgebra> K, L;
    std::optional<IntMatrix> m;
    Pattern window;
    std::vector<Pattern> patterns;
    for (auto& [key, rest] : read_records(path)) {
        if (key == "algebra") {
            K = parse_algebra(rest);
        } else if (key == "target") {
            L = parse_algebra(rest);
        } else if (key == "matrix") {
            m = parse_matrix(rest);
        } else if (key == "window" || key == "pattern") {
            if (!K) throw Error(ErrorKind::Parse, path + ": 'algebra' must come first");
            auto pts = make_pattern(parse_elems(*K, rest));
            if (key == "window") window = pts;
            else patterns.push_back(pts);
        } else {
            throw Error(ErrorKind::Parse, path + ": unknown keyword '" + key + "'");
        }
    }
    if (!K) throw Error(ErrorKind::Parse, path + ": missing 'algebra'");
    ZLinearMap A = m ? make_map(*K, L.value_or(*K), *m) : identity_map(*K);
    return make_code(A, window, patterns);
}

ZLinearMap load_map(const std::string& path) {
    std::optional<EtaleAlgebra> K, L;
    std::optional<IntMatrix> m;
    for (auto& [key, rest] : read_records(path)) {
        if (key == "source") K = parse_algebra(rest);
        else if (key == "target") L = parse_algebra(rest);
        else if (key == "matrix") m = parse_matrix(rest);
        else throw Error(ErrorKind::Parse, path + ": unknown keyword '" + key + "'");
    }
    if (!K || !m) throw Error(ErrorKind::Parse, path + ": needs 'source' and 'matrix'");
    return make_map(*K, L.value_or(*K), *m);
}

// "p^k=r" or "p.slot^k=r"
CongruenceConstraint parse_cong(const EtaleAlgebra& K, const std::string& text) {
    auto eq = text.find('=');
    auto caret = text.find('^');
    if (eq == std::string::npos || caret == std::string::npos || caret > eq)
        throw Usage("congruence must look like p^k=r or p.slot^k=r: '" + text + "'");
    std::string head = trim(text.substr(0, caret));
    int slot = 0;
    if (auto dot = head.find('.'); dot != std::string::npos) {
        slot = static_cast<int>(parse_ints(head.substr(dot + 1)).at(0));
        head = head.substr(0, dot);
    }
    auto p = parse_ints(head);
    auto k = parse_ints(text.substr(caret + 1, eq - caret - 1));
    if (p.size() != 1 || k.size() != 1) throw Usage("bad congruence '" + text + "'");
    auto primes = split_prime(K, p[0]);
    if (slot < 0 || slot >= static_cast<int>(primes.size()))
        throw Error(ErrorKind::InvalidConstraint, "no prime slot " + std::to_string(slot) + " above " + head);
    CongruenceConstraint c;
    c.prime = primes[static_cast<size_t>(slot)];
    c.k = static_cast<int>(k[0]);
    c.target = parse_coord(c.prime.field, trim(text.substr(eq + 1)));
    return c;
}

json elems_json(const EtaleAlgebra& K, const std::vector<Elem>& xs) {
    json a = json::array();
    for (auto& x : xs) a.push_back(K.format(x));
    return a;
}

// Rounded outward so the printed interval still encloses.
json interval_json(const Interval& I) {
    double lo = static_cast<double>(I.lo), hi = static_cast<double>(I.hi);
    if (lo > I.lo) lo = std::nextafter(lo, -HUGE_VAL);
    if (hi < I.hi) hi = std::nextafter(hi, HUGE_VAL);
    return json{{"lo", lo}, {"hi", hi},
                {"width", static_cast<double>(I.width())}};
}

std::string matrix_string(const IntMatrix& m) {
    std::string s = "[";
    for (size_t i = 0; i < m.size(); ++i) {
        s += i ? ",[" : "[";
        for (size_t j = 0; j < m[i].size(); ++j) s += (j ? "," : "") + std::to_string(m[i][j]);
        s += "]";
    }
    return s + "]";
}

// One human-readable line per leaf, keys in insertion order.
void print_human(const json& j, const std::string& prefix, std::ostream& os) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            print_human(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), os);
        return;
    }
    bool nested = false;
    if (j.is_array())
        for (auto& v : j) nested = nested || v.is_object();
    if (nested) {
        for (size_t i = 0; i < j.size(); ++i) print_human(j[i], prefix + "[" + std::to_string(i) + "]", os);
        return;
    }
    os << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
}

// Each selftest case is a name and a predicate.
using Case = std::pair<std::string, std::function<bool()>>;

Pattern ints(std::initializer_list<i64> v) {
    Pattern p;
    for (i64 x : v) p.push_back({x});
    return make_pattern(p);
}

std::vector<Case> selftest_cases(const std::string& group) {
    const auto Q = parse_algebra("Q");
    const double d6 = 6 / (std::numbers::pi * std::numbers::pi);
    if (group == "sieve")
        return {
            {"6 is squarefree", [=] { return is_member(kfree_sieve(Q, 2), {6}); }},
            {"12 is not squarefree", [=] { return !is_member(kfree_sieve(Q, 2), {12}); }},
            {"density interval holds 6/pi^2", [=] { return density_interval(kfree_sieve(Q, 2), 1000).contains(d6); }},
            {"sieve text round trip",
             [=] {
                 auto R = parse_sieve("algebra Q\ntail kfree 3\n");
                 return format_sieve(parse_sieve(format_sieve(R))) == format_sieve(R);
             }},
        };
    if (group == "lg")
        return {
            {"solve 2^2=3 over Q",
             [=] {
                 auto R = kfree_sieve(Q, 2);
                 auto r = solve(R, {parse_cong(Q, "2^2=3")});
                 return r.found && mod(r.y[0], 4) == 3 && is_member(R, r.y);
             }},
            {"surjectivity Q k=2 p=2", [=] { return check_local_surjectivity(Q, 2, 2).ok(); }},
            {"1-free sieve is not boundable",
             [=] {
                 try {
                     solve(kfree_sieve(Q, 1), {parse_cong(Q, "5^1=2")});
                 } catch (const Error& e) {
                     return e.kind() == ErrorKind::TailNotBoundable;
                 }
                 return false;
             }},
        };
    if (group == "linmap")
        return {
            {"identity is monomial", [=] { return decompose_monomial(identity_map(Q)).has_value(); }},
            {"negation is monomial", [=] { return decompose_monomial(make_map(Q, Q, {{-1}})).has_value(); }},
            {"doubling is M_2", [=] { return decompose_monomial(make_map(Q, Q, {{2}}))->eps == Elem{2}; }},
            {"[[1,0],[1,1]] on QxQ is not monomial",
             [] {
                 auto QQ = parse_algebra("Q x Q");
                 return !decompose_monomial(make_map(QQ, QQ, {{1, 0}, {1, 1}})).has_value();
             }},
            {"preserver_scan(3,2,2) has 8 entries", [] { return preserver_scan(3, 2, 2).size() == 8; }},
            {"doubling fails at p=2",
             [=] {
                 auto R = kfree_sieve(Q, 2);
                 return !check_local_condition(make_map(Q, Q, {{2}}), R, R, 2).holds;
             }},
        };
    if (group == "shift")
        return {
            {"{0,1} is admissible for squarefree", [=] { return admissible(kfree_sieve(Q, 2), ints({0, 1})); }},
            {"{0,1,2,3} is not admissible", [=] { return !admissible(kfree_sieve(Q, 2), ints({0, 1, 2, 3})); }},
            {"count_admissible N=8 is 175", [=] { return count_admissible(kfree_sieve(Q, 2), 8) == 175; }},
            {"symmetry code on the sample pattern",
             [=] {
                 auto code = make_code(identity_map(Q), ints({-1, 0, 1}),
                                       {ints({0}), ints({0, 1}), ints({-1, 0}), ints({-1, 1})});
                 return apply_block_code(code, ints({-3, -2, -1, 2, 3, 4, 9, 17, 19}), cube(1, -4, 20)) ==
                        ints({-3, -1, 2, 4, 9, 17, 18, 19});
             }},
            {"orbit worked instance",
             [=] {
                 auto r = orbit_approximation(Q, 2, ints({1, 2}), ints({0, 1, 2}));
                 return r.found && r.delta == Elem{4};
             }},
        };
    if (group == "entropy")
        return {
            {"zeta_Q(2) encloses pi^2/6",
             [=] { return zeta_K(Q, 2, 1000).contains(std::numbers::pi * std::numbers::pi / 6); }},
            {"product encloses log2 * 6/pi^2",
             [=] { return entropy_product(kfree_sieve(Q, 2), 1000).contains(std::log(2.0L) * d6); }},
            {"empirical N=8 is log(175)/8",
             [=] { return std::abs(empirical_entropy(kfree_sieve(Q, 2), 8) - std::log(175.0L) / 8) < 1e-15L; }},
        };
    return {};
}

int run_selftest(const std::string& group, bool as_json) {
    json cases = json::array();
    int passed = 0;
    auto all = selftest_cases(group);
    for (auto& [name, fn] : all) {
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception&) {
            ok = false;
        }
        passed += ok;
        cases.push_back(json{{"case", name}, {"passed", ok}});
    }
    json rep{{"command", group + " selftest"},
             {"result", json{{"passed", passed}, {"total", all.size()}, {"cases", cases}}},
             {"status", passed == static_cast<int>(all.size()) ? "ok" : "failed"}};
    if (as_json) std::cout << rep.dump(2) << "\n";
    else print_human(rep, "", std::cout);
    return passed == static_cast<int>(all.size()) ? 0 : 1;
}

struct Globals {
    std::string spec;
    int threads = 1;
    bool json_out = false;
};

// What a handler hands back: the result body and whether it is a positive outcome.
struct Outcome {
    json result;
    bool positive = true;
    std::string status = "ok";
};

template <class T>
const T& need(const std::optional<T>& v, const char* flag) {
    if (!v) throw Usage(std::string("missing required option ") + flag);
    return *v;
}

SieveSpec sieve_from(const std::string& path) { return load_sieve(resolve(path, ".sv")); }

const std::string& need_spec(const Globals& g) {
    if (g.spec.empty()) throw Usage("missing required option --spec");
    return g.spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-free integers, local-global sieves and admissible shift spaces"};
    app.fallthrough();
    app.require_subcommand(1);
    Globals g;
    app.add_option("--spec", g.spec, "sieve specification file");
    app.add_option("--threads", g.threads, "worker thread cap")->check(CLI::Range(1, 256));
    app.add_flag("--json", g.json_out, "emit JSON instead of the key: value table");

    // Per leaf: config echo, handler and owning group for --selftest.
    struct Leaf {
        std::string group, name;
        CLI::App* sub;
        bool selftest = false;
        std::function<json()> config;
        std::function<Outcome()> run;
    };
    std::vector<std::unique_ptr<Leaf>> leaves;
    auto leaf = [&](CLI::App* grp, const std::string& name, const std::string& desc) {
        auto l = std::make_unique<Leaf>();
        l->group = grp->get_name();
        l->name = name;
        l->sub = grp->add_subcommand(name, desc);
        l->sub->add_flag("--selftest", l->selftest, "run the group's built-in examples");
        leaves.push_back(std::move(l));
        return leaves.back().get();
    };
    auto opt = [](json& j, const char* key, const auto& v) {
        if (v) j[key] = *v;
        else j[key] = nullptr;
    };

    // sieve
    auto* sieve = app.add_subcommand("sieve", "k-free style sieves");
    sieve->require_subcommand(1);
    std::optional<i64> o_bound, o_limit, o_cutoff, o_X, o_M;
    std::optional<int> o_k;
    std::optional<std::string> o_field;
    {
        auto* l = leaf(sieve, "enumerate", "list members of V(K,R) in a box");
        l->sub->add_option("--bound", o_bound, "box half-width B");
        l->sub->add_option("--limit", o_limit, "members listed (default 50)");
        l->config = [&] {
            json c{{"spec", g.spec}, {"threads", g.threads}};
            opt(c, "bound", o_bound);
            c["limit"] = o_limit.value_or(50);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            i64 B = need(o_bound, "--bound");
            i64 limit = o_limit.value_or(50);
            i64 count = count_V(R, B, g.threads);
            std::vector<Elem> first;
            if (limit > 0) {
                auto all = enumerate_V(R, B);
                if (static_cast<i64>(all.size()) > limit) all.resize(static_cast<size_t>(limit));
                first = all;
            }
            return Outcome{json{{"algebra", R.K.to_string()}, {"count", count}, {"members", elems_json(R.K, first)}}};
        };

        l = leaf(sieve, "density", "rigorous density interval, optionally with an empirical count");
        l->sub->add_option("--cutoff", o_cutoff, "prime cutoff P");
        l->sub->add_option("--bound", o_bound, "also count members in [-B, B]^n");
        l->config = [&] {
            json c{{"spec", g.spec}, {"threads", g.threads}};
            opt(c, "cutoff", o_cutoff);
            opt(c, "bound", o_bound);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            auto I = density_interval(R, need(o_cutoff, "--cutoff"));
            json r{{"algebra", R.K.to_string()}, {"interval", interval_json(I)}};
            if (o_bound) {
                i64 B = *o_bound;
                i64 count = count_V(R, B, g.threads);
                long double vol = std::pow(static_cast<long double>(2 * B + 1), R.K.degree);
                r["count"] = count;
                r["empirical"] = static_cast<double>(count / vol);
            }
            return Outcome{r};
        };

        l = leaf(sieve, "tail", "count x in [0, X) hit by a tail prime above M");
        l->sub->add_option("--field", o_field, "algebra, e.g. 'Q(sqrt 2)'");
        l->sub->add_option("--k", o_k, "exponent k");
        l->sub->add_option("--X", o_X, "range X");
        l->sub->add_option("--M", o_M, "prime threshold M");
        l->config = [&] {
            json c;
            opt(c, "field", o_field);
            opt(c, "k", o_k);
            opt(c, "X", o_X);
            opt(c, "M", o_M);
            return c;
        };
        l->run = [&] {
            auto K = parse_algebra(need(o_field, "--field"));
            i64 t = tail_count(K, need(o_k, "--k"), need(o_X, "--X"), need(o_M, "--M"));
            return Outcome{json{{"algebra", K.to_string()}, {"count", t}}};
        };
    }

    // lg
    auto* lg = app.add_subcommand("lg", "local-global solving");
    lg->require_subcommand(1);
    std::vector<std::string> o_cong;
    std::optional<i64> o_p;
    {
        auto* l = leaf(lg, "solve", "find y in V(K,R) meeting congruences");
        l->sub->add_option("--cong", o_cong, "congruence p^k=r or p.slot^k=r, repeatable");
        l->sub->add_option("--bound", o_bound, "largest multiplier shell (default 64)");
        l->config = [&] {
            json c{{"spec", g.spec}, {"cong", o_cong}};
            c["bound"] = o_bound.value_or(64);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            std::vector<CongruenceConstraint> cs;
            for (auto& s : o_cong) cs.push_back(parse_cong(R.K, s));
            SolveOptions so;
            so.bound = o_bound.value_or(64);
            auto r = solve(R, cs, so);
            json out{{"found", r.found}, {"tried", r.tried}};
            if (r.found) {
                out["y"] = R.K.format(r.y);
                out["base"] = R.K.format(r.base);
                out["multiplier"] = R.K.format(r.multiplier);
                return Outcome{out};
            }
            out["reason"] = "no member within the multiplier bound";
            return Outcome{out, false, "not-found"};
        };

        l = leaf(lg, "surjectivity", "every class of V_{K,k,p} is hit by a k-free element");
        l->sub->add_option("--field", o_field, "algebra");
        l->sub->add_option("--k", o_k, "exponent k");
        l->sub->add_option("--p", o_p, "rational prime p");
        l->sub->add_option("--bound", o_bound, "multiplier height bound (default 6)");
        l->config = [&] {
            json c;
            opt(c, "field", o_field);
            opt(c, "k", o_k);
            opt(c, "p", o_p);
            c["bound"] = o_bound.value_or(6);
            return c;
        };
        l->run = [&] {
            auto K = parse_algebra(need(o_field, "--field"));
            auto rep = check_local_surjectivity(K, need(o_k, "--k"), need(o_p, "--p"), o_bound.value_or(6));
            json out{{"algebra", K.to_string()}, {"classes", rep.total}, {"local", rep.local},
                     {"witnessed", rep.witnessed}, {"max_height", rep.max_height}, {"ok", rep.ok()}};
            if (!rep.ok()) {
                for (i64 i = 0; i < rep.total; ++i)
                    if (!rep.excluded(i) && !rep.witness(i)) {
                        out["missing"] = K.format(rep.class_rep(i));
                        break;
                    }
                return Outcome{out, false, "counterexample"};
            }
            return Outcome{out};
        };
    }

    // linmap
    auto* lm = app.add_subcommand("linmap", "Z-linear maps between rings of integers");
    lm->require_subcommand(1);
    std::optional<std::string> o_map, o_target_spec, o_x, o_a, o_R;
    std::optional<i64> o_P, o_H, o_q;
    std::optional<int> o_n, o_m;
    // Source sieve from --spec, target from --target-spec, else k-free (default 2).
    auto map_sieves = [&](const ZLinearMap& A) {
        int k = o_k.value_or(2);
        SieveSpec R = g.spec.empty() ? kfree_sieve(A.src, k) : sieve_from(g.spec);
        SieveSpec S = o_target_spec ? sieve_from(*o_target_spec) : kfree_sieve(A.dst, k);
        return std::pair{R, S};
    };
    auto map_config = [&] {
        json c;
        opt(c, "map", o_map);
        c["spec"] = g.spec.empty() ? json(nullptr) : json(g.spec);
        opt(c, "target_spec", o_target_spec);
        c["k"] = o_k.value_or(2);
        return c;
    };
    auto map_from = [&] { return load_map(resolve(need(o_map, "--map"), ".map")); };
    {
        auto* l = leaf(lm, "check", "local condition at one prime");
        l->sub->add_option("--map", o_map, "map file");
        l->sub->add_option("--target-spec", o_target_spec, "target sieve file");
        l->sub->add_option("--k", o_k, "k for default k-free sieves (default 2)");
        l->sub->add_option("--p", o_p, "rational prime p");
        l->config = [&] {
            json c = map_config();
            opt(c, "p", o_p);
            return c;
        };
        l->run = [&] {
            auto A = map_from();
            auto [R, S] = map_sieves(A);
            auto r = check_local_condition(A, R, S, need(o_p, "--p"));
            json out{{"holds", r.holds}, {"exponent", r.exponent}, {"method", r.method}};
            if (!r.holds) {
                out["witness"] = A.src.format(*r.witness);
                return Outcome{out, false, "counterexample"};
            }
            return Outcome{out};
        };

        l = leaf(lm, "scan", "local condition at every prime up to P");
        l->sub->add_option("--map", o_map, "map file");
        l->sub->add_option("--target-spec", o_target_spec, "target sieve file");
        l->sub->add_option("--k", o_k, "k for default k-free sieves (default 2)");
        l->sub->add_option("--P", o_P, "prime bound");
        l->config = [&] {
            json c = map_config();
            opt(c, "P", o_P);
            return c;
        };
        l->run = [&] {
            auto A = map_from();
            auto [R, S] = map_sieves(A);
            auto r = scan_primes(A, R, S, need(o_P, "--P"));
            json out{{"checked", r.checked}};
            if (r.prime) {
                out["prime"] = *r.prime;
                out["witness"] = A.src.format(*r.witness);
                return Outcome{out, false, "counterexample"};
            }
            out["prime"] = nullptr;
            return Outcome{out};
        };

        l = leaf(lm, "decompose", "write the map as M_eps o tau");
        l->sub->add_option("--map", o_map, "map file");
        l->config = [&] {
            json c;
            opt(c, "map", o_map);
            return c;
        };
        l->run = [&] {
            auto A = map_from();
            auto d = decompose_monomial(A);
            if (!d) return Outcome{json{{"monomial", false}}, false, "not-found"};
            bool unit = true;
            for (i64 nm : A.dst.norms(d->eps)) unit = unit && (nm == 1 || nm == -1);
            return Outcome{json{{"monomial", true}, {"tau", d->tau.to_string()}, {"eps", A.dst.format(d->eps)},
                                {"eps_unit", unit}}};
        };

        l = leaf(lm, "preservers", "matrices over F_q preserving (F^x)^n");
        l->sub->add_option("--q", o_q, "prime q");
        l->sub->add_option("--n", o_n, "source dimension");
        l->sub->add_option("--m", o_m, "target dimension");
        l->config = [&] {
            json c;
            opt(c, "q", o_q);
            opt(c, "n", o_n);
            opt(c, "m", o_m);
            return c;
        };
        l->run = [&] {
            auto ps = preserver_scan(need(o_q, "--q"), need(o_n, "--n"), need(o_m, "--m"));
            json ms = json::array();
            i64 mono = 0;
            for (auto& p : ps) {
                mono += p.monomial;
                ms.push_back(json{{"matrix", matrix_string(p.m)}, {"monomial", p.monomial}});
            }
            return Outcome{json{{"count", ps.size()}, {"monomial", mono}, {"matrices", ms}}};
        };

        l = leaf(lm, "cover", "smallest t with a_i + t x_i outside R_i mod p^k");
        l->sub->add_option("--p", o_p, "prime p");
        l->sub->add_option("--k", o_k, "exponent k");
        l->sub->add_option("--x", o_x, "x_1,...,x_n");
        l->sub->add_option("--a", o_a, "a_1,...,a_n");
        l->sub->add_option("--R", o_R, "residue sets R_i separated by ';'");
        l->config = [&] {
            json c;
            opt(c, "p", o_p);
            opt(c, "k", o_k);
            opt(c, "x", o_x);
            opt(c, "a", o_a);
            opt(c, "R", o_R);
            return c;
        };
        l->run = [&] {
            std::vector<std::vector<i64>> Rs;
            for (auto& part : split(need(o_R, "--R"), ';')) Rs.push_back(parse_ints(part));
            i64 t = cover_witness(need(o_p, "--p"), need(o_k, "--k"), parse_ints(need(o_x, "--x")),
                                  parse_ints(need(o_a, "--a")), Rs);
            return Outcome{json{{"t", t}}};
        };

        l = leaf(lm, "units", "units of height <= H map to units");
        l->sub->add_option("--map", o_map, "map file");
        l->sub->add_option("--H", o_H, "height bound");
        l->config = [&] {
            json c;
            opt(c, "map", o_map);
            opt(c, "H", o_H);
            return c;
        };
        l->run = [&] {
            auto A = map_from();
            auto r = check_unit_preservation(A, need(o_H, "--H"));
            json out{{"holds", r.holds}, {"tested", r.tested}};
            if (!r.holds) {
                out["unit"] = A.src.format(*r.unit);
                out["image"] = A.dst.format(*r.image);
                return Outcome{out, false, "counterexample"};
            }
            return Outcome{out};
        };
    }

    // shift
    auto* sh = app.add_subcommand("shift", "admissible shift spaces and block codes");
    sh->require_subcommand(1);
    std::optional<std::string> o_pattern, o_code, o_known, o_Xs, o_Ms;
    std::optional<int> o_trials;
    std::optional<unsigned long long> o_seed;
    std::optional<i64> o_W, o_tail;
    {
        auto* l = leaf(sh, "admissible", "admissibility certificate for a finite pattern");
        l->sub->add_option("--pattern", o_pattern, "pattern file");
        l->config = [&] {
            json c{{"spec", g.spec}};
            opt(c, "pattern", o_pattern);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            auto pf = load_pattern(resolve(need(o_pattern, "--pattern"), ".pat"));
            if (!(pf.K == R.K)) throw Error(ErrorKind::ComponentMismatch, "pattern and sieve algebras differ");
            auto cert = is_admissible(R, pf.X);
            json w = json::array();
            for (auto& t : cert.witnesses)
                w.push_back(json{{"prime", t.prime.to_string()}, {"delta", format_coord(t.prime.field, t.delta)}});
            json out{{"admissible", cert.admissible}, {"prime_bound", cert.prime_bound}, {"witnesses", w}};
            if (!cert.admissible) {
                out["violation"] = cert.violation->to_string();
                return Outcome{out, false, "counterexample"};
            }
            return Outcome{out};
        };

        l = leaf(sh, "apply", "apply a window code to a pattern");
        l->sub->add_option("--code", o_code, "code file");
        l->sub->add_option("--pattern", o_pattern, "pattern file");
        l->sub->add_option("--known", o_known, "known region 'lo .. hi' (overrides the file)");
        l->config = [&] {
            json c;
            opt(c, "code", o_code);
            opt(c, "pattern", o_pattern);
            opt(c, "known", o_known);
            return c;
        };
        l->run = [&] {
            auto code = load_code(resolve(need(o_code, "--code"), ".code"));
            auto pf = load_pattern(resolve(need(o_pattern, "--pattern"), ".pat"));
            if (!(pf.K == code.A.src)) throw Error(ErrorKind::ComponentMismatch, "pattern and code algebras differ");
            auto known = o_known ? parse_box(pf.K, *o_known) : pf.known;
            Pattern Y = known ? apply_block_code(code, pf.X, *known) : apply_finite(code, pf.X);
            json out{{"mode", known ? "box" : "finite"}, {"input", elems_json(pf.K, pf.X)},
                     {"output", elems_json(code.A.dst, Y)}};
            return Outcome{out};
        };

        l = leaf(sh, "verify", "randomized intertwiner check");
        l->sub->add_option("--code", o_code, "code file");
        l->sub->add_option("--target-spec", o_target_spec, "target sieve (default --spec)");
        l->sub->add_option("--trials", o_trials, "trials (default 100)");
        l->sub->add_option("--seed", o_seed, "random seed (default 1)");
        l->config = [&] {
            json c{{"spec", g.spec}};
            opt(c, "code", o_code);
            c["target_spec"] = o_target_spec.value_or(g.spec);
            c["trials"] = o_trials.value_or(100);
            c["seed"] = o_seed.value_or(1);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            auto S = o_target_spec ? sieve_from(*o_target_spec) : R;
            auto code = load_code(resolve(need(o_code, "--code"), ".code"));
            check_code(code, R);
            auto rep = verify_intertwiner(code, R, S, o_trials.value_or(100), o_seed.value_or(1));
            json out{{"passed", rep.passed}, {"trials", rep.trials}};
            if (!rep.passed) {
                out["failure"] = rep.failure;
                out["X"] = elems_json(R.K, rep.X);
                return Outcome{out, false, "counterexample"};
            }
            return Outcome{out};
        };

        l = leaf(sh, "conjugacy", "search for a conjugacy between two shift spaces");
        l->sub->add_option("--target-spec", o_target_spec, "second sieve file");
        l->sub->add_option("--H", o_H, "unit height bound (default 20)");
        l->sub->add_option("--tail-cutoff", o_tail, "tail primes compared (default 50)");
        l->config = [&] {
            json c{{"spec", g.spec}};
            opt(c, "target_spec", o_target_spec);
            c["H"] = o_H.value_or(20);
            c["tail_cutoff"] = o_tail.value_or(50);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            auto S = sieve_from(need(o_target_spec, "--target-spec"));
            auto r = conjugacy_search(R, S, o_H.value_or(20), o_tail.value_or(50));
            json out{{"verdict", verdict_name(r.verdict)}, {"tested", r.tested}, {"tail_exact", r.tail_exact}};
            if (r.tau) out["tau"] = r.tau->to_string();
            if (r.eps) out["eps"] = S.K.format(*r.eps);
            json d = json::array();
            for (auto& [P, c] : r.deltas) d.push_back(json{{"prime", P.to_string()}, {"delta", format_coord(P.field, c)}});
            out["deltas"] = d;
            out["reason"] = r.reason;
            bool ok = r.verdict == ConjugacyResult::Verdict::Conjugate;
            return Outcome{out, ok, ok ? "ok" : (r.verdict == ConjugacyResult::Verdict::NotConjugate ? "counterexample"
                                                                                                      : "not-found")};
        };

        l = leaf(sh, "symmetries", "window codes over [-W, W]^n that may be symmetries");
        l->sub->add_option("--W", o_W, "window radius");
        l->config = [&] {
            json c{{"spec", g.spec}};
            opt(c, "W", o_W);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            auto cands = symmetry_scan(R, need(o_W, "--W"));
            json arr = json::array();
            for (auto& c : cands) {
                json pats = json::array();
                for (auto& T : c.code.patterns) pats.push_back(elems_json(R.K, T));
                json e{{"patterns", pats}};
                e["translation"] = c.translation ? json(R.K.format(*c.translation)) : json(nullptr);
                arr.push_back(e);
            }
            return Outcome{json{{"count", cands.size()}, {"candidates", arr}}};
        };

        l = leaf(sh, "orbit", "Delta with (-Delta + V) meeting M exactly in X");
        l->sub->add_option("--field", o_field, "algebra");
        l->sub->add_option("--k", o_k, "exponent k");
        l->sub->add_option("--X", o_Xs, "X, comma separated");
        l->sub->add_option("--M", o_Ms, "window M, comma separated");
        l->sub->add_option("--bound", o_bound, "multiplier bound (default 64)");
        l->config = [&] {
            json c;
            opt(c, "field", o_field);
            opt(c, "k", o_k);
            opt(c, "X", o_Xs);
            opt(c, "M", o_Ms);
            c["bound"] = o_bound.value_or(64);
            return c;
        };
        l->run = [&] {
            auto K = parse_algebra(need(o_field, "--field"));
            auto X = make_pattern(parse_elems(K, need(o_Xs, "--X")));
            auto M = make_pattern(parse_elems(K, need(o_Ms, "--M")));
            auto r = orbit_approximation(K, need(o_k, "--k"), X, M, o_bound.value_or(64));
            json out{{"found", r.found}, {"tried", r.tried}};
            if (!r.found) return Outcome{out, false, "not-found"};
            out["delta"] = K.format(r.delta);
            return Outcome{out};
        };
    }

    // entropy
    auto* en = app.add_subcommand("entropy", "topological entropy");
    en->require_subcommand(1);
    std::optional<int> o_s;
    std::optional<i64> o_N;
    {
        auto* l = leaf(en, "product", "log 2 times the density interval");
        l->sub->add_option("--cutoff", o_cutoff, "prime cutoff P");
        l->config = [&] {
            json c{{"spec", g.spec}};
            opt(c, "cutoff", o_cutoff);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            return Outcome{json{{"interval", interval_json(entropy_product(R, need(o_cutoff, "--cutoff")))}}};
        };

        l = leaf(en, "empirical", "log(#admissible subsets of [0,N)^n) / N^n");
        l->sub->add_option("--N", o_N, "box side N");
        l->config = [&] {
            json c{{"spec", g.spec}};
            opt(c, "N", o_N);
            return c;
        };
        l->run = [&] {
            auto R = sieve_from(need_spec(g));
            i64 N = need(o_N, "--N");
            i64 count = count_admissible(R, N);
            return Outcome{json{{"count", count}, {"entropy", static_cast<double>(empirical_entropy(R, N))}}};
        };

        l = leaf(en, "zeta", "Dedekind zeta value as an interval");
        l->sub->add_option("--field", o_field, "algebra");
        l->sub->add_option("--s", o_s, "integer s >= 2");
        l->sub->add_option("--cutoff", o_cutoff, "prime cutoff");
        l->config = [&] {
            json c;
            opt(c, "field", o_field);
            opt(c, "s", o_s);
            opt(c, "cutoff", o_cutoff);
            return c;
        };
        l->run = [&] {
            auto K = parse_algebra(need(o_field, "--field"));
            auto I = zeta_K(K, need(o_s, "--s"), need(o_cutoff, "--cutoff"));
            return Outcome{json{{"algebra", K.to_string()}, {"interval", interval_json(I)}}};
        };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Leaf* chosen = nullptr;
    for (auto& l : leaves)
        if (l->sub->parsed()) chosen = l.get();
    if (!chosen) {
        std::cerr << app.help();
        return 2;
    }
    if (chosen->selftest) return run_selftest(chosen->group, g.json_out);

    try {
        json config = chosen->config();
        Outcome o = chosen->run();
        json rep{{"command", chosen->group + " " + chosen->name}, {"config", config}, {"result", o.result},
                 {"status", o.status}};
        if (g.json_out) std::cout << rep.dump(2) << "\n";
        else print_human(rep, "", std::cout);
        return o.positive ? 0 : 1;
    } catch (const Usage& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const FileNotFound& e) {
        std::cerr << "file not found: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4 + static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4 + static_cast<int>(ErrorKind::Parse) + 1;
    }
}
