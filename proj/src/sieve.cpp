#include "kfree/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace kfree {

TailRule TailRule::kfree(int k) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
    TailRule t;
    t.kind = Kind::KFree;
    t.k = k;
    return t;
}

TailRule TailRule::residue_classes(int k, std::vector<Elem> residues) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
    TailRule t;
    t.kind = Kind::Residues;
    t.k = k;
    std::sort(residues.begin(), residues.end());
    residues.erase(std::unique(residues.begin(), residues.end()), residues.end());
    t.residues = std::move(residues);
    if (t.residues.empty()) t.kind = Kind::Empty;
    return t;
}

std::string TailRule::to_string(const EtaleAlgebra& K) const {
    switch (kind) {
    case Kind::Empty: return "empty";
    case Kind::KFree: return "kfree " + std::to_string(k);
    case Kind::Residues: {
        std::string s = "residues " + std::to_string(k) + " :";
        for (size_t i = 0; i < residues.size(); ++i) s += (i ? "," : " ") + K.format(residues[i]);
        return s;
    }
    }
    return "";
}

bool LocalSet::contains_index(i64 idx) const { return std::binary_search(classes.begin(), classes.end(), idx); }
bool LocalSet::contains(Coord x) const { return contains_index(mod.index(x)); }

const LocalSet* SieveSpec::exception(const PrimeIdeal& P) const {
    for (const auto& [Q, L] : exceptions)
        if (Q == P) return &L;
    return nullptr;
}

namespace {

std::vector<PrimeIdeal> primes_in_comp(const EtaleAlgebra& K, int c, i64 p) {
    std::vector<PrimeIdeal> out;
    for (auto& P : split_prime(K, p))
        if (P.comp == c) out.push_back(P);
    return out;
}

std::vector<Elem> tail_residues(const TailRule& t, const EtaleAlgebra& K) {
    if (t.kind == TailRule::Kind::KFree) return {K.zero()};
    if (t.kind == TailRule::Kind::Residues) return t.residues;
    return {};
}

LocalSet tail_local_set(const SieveSpec& R, const PrimeIdeal& P) {
    LocalSet L;
    L.mod = ideal_power(P, R.tail.k);
    for (const Elem& r : tail_residues(R.tail, R.K)) L.classes.push_back(L.mod.index(R.K.coord(r, P.comp)));
    std::sort(L.classes.begin(), L.classes.end());
    L.classes.erase(std::unique(L.classes.begin(), L.classes.end()), L.classes.end());
    return L;
}

} // namespace

LocalSet local_set(const SieveSpec& R, const PrimeIdeal& P) {
    if (const LocalSet* e = R.exception(P)) return *e;
    if (R.tail.kind == TailRule::Kind::Empty) {
        LocalSet L;
        L.mod = ideal_power(P, 1);
        return L;
    }
    return tail_local_set(R, P);
}

SieveSpec build_sieve(const EtaleAlgebra& K, const TailRule& tail, const std::vector<ExceptionSpec>& exceptions) {
    SieveSpec R;
    R.K = K;
    R.tail = tail;
    for (const Elem& r : tail.residues)
        if (static_cast<int>(r.size()) != K.degree)
            throw Error(ErrorKind::ComponentMismatch, "tail residue has wrong size");
    for (const auto& ex : exceptions) {
        auto ps = split_prime(K, ex.p);
        if (ex.slot < 0 || ex.slot >= static_cast<int>(ps.size()))
            throw Error(ErrorKind::InvalidArgument, "no prime with index " + std::to_string(ex.slot) + " above " +
                                                        std::to_string(ex.p));
        const PrimeIdeal& P = ps[ex.slot];
        if (R.exception(P)) throw Error(ErrorKind::InvalidArgument, "duplicate exception at " + P.to_string());
        LocalSet L;
        L.mod = ideal_power(P, ex.k);
        for (Coord c : ex.classes) {
            bool in_box = c.a >= 0 && c.a < L.mod.h11 && c.b >= 0 && c.b < L.mod.h22 &&
                          (L.mod.dim == 2 || c.b == 0);
            if (!in_box)
                throw Error(ErrorKind::ClassOutOfRange, format_coord(P.field, c) + " is not a canonical class mod " +
                                                            P.to_string() + "^" + std::to_string(ex.k));
            L.classes.push_back(L.mod.index(c));
        }
        std::sort(L.classes.begin(), L.classes.end());
        L.classes.erase(std::unique(L.classes.begin(), L.classes.end()), L.classes.end());
        R.exceptions.emplace_back(P, L);
    }
    std::sort(R.exceptions.begin(), R.exceptions.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // derived flags
    R.non_large = true;
    for (const auto& [P, L] : R.exceptions)
        if (L.count() >= L.mod.norm) R.non_large = false;
    if (tail.kind == TailRule::Kind::Residues) {
        // residues r_i, r_j collide mod P^k only if Nm(P)^k divides Nm(r_i - r_j)
        i64 bound = static_cast<i64>(tail.residues.size());
        for (int c = 0; c < K.size(); ++c)
            for (size_t i = 0; i < tail.residues.size(); ++i)
                for (size_t j = 0; j < i; ++j) {
                    Coord d = K.coord(K.sub(tail.residues[i], tail.residues[j]), c);
                    bound = std::max(bound, std::abs(field_norm(K.comps[c], d)));
                }
        for (i64 p : small_primes()) {
            if (ipow(p, 1) > bound) break;
            for (auto& P : split_prime(K, p)) {
                if (R.exception(P)) continue;
                LocalSet L = tail_local_set(R, P);
                if (L.count() >= L.mod.norm) R.non_large = false;
            }
        }
    }
    R.cofinite = tail.kind != TailRule::Kind::Empty;
    return R;
}

SieveSpec kfree_sieve(const EtaleAlgebra& K, int k) { return build_sieve(K, TailRule::kfree(k), {}); }

Verdict membership(const SieveSpec& R, const Elem& x) {
    if (static_cast<int>(x.size()) != R.K.degree) throw Error(ErrorKind::ComponentMismatch, "element size");
    Verdict v;
    auto violate = [&](const PrimeIdeal& P, i64 idx) {
        if (!v.prime || P < *v.prime || (P.p == v.prime->p && P.comp < v.prime->comp)) {
            v.prime = P;
            v.class_index = idx;
        }
        v.member = false;
    };
    for (const auto& [P, L] : R.exceptions) {
        Coord xc = R.K.coord(x, P.comp);
        v.checked.push_back(P);
        if (L.contains(xc)) violate(P, L.mod.index(xc));
    }
    if (R.tail.kind != TailRule::Kind::Empty) {
        std::vector<Elem> res = tail_residues(R.tail, R.K);
        for (int c = 0; c < R.K.size(); ++c) {
            const FieldSpec& f = R.K.comps[c];
            Coord xc = R.K.coord(x, c);
            for (const Elem& r : res) {
                Coord rc = R.K.coord(r, c);
                Coord y{xc.a - rc.a, xc.b - rc.b};
                if (y.a == 0 && y.b == 0) {
                    // x = r lies in R_P for every tail prime of this component
                    for (i64 p : small_primes()) {
                        bool found = false;
                        for (auto& P : primes_in_comp(R.K, c, p)) {
                            if (R.exception(P)) continue;
                            v.checked.push_back(P);
                            violate(P, ideal_power(P, R.tail.k).index(xc));
                            found = true;
                            break;
                        }
                        if (found) break;
                    }
                    continue;
                }
                i64 N = field_norm(f, y);
                for (i64 p : prime_power_divisors(N, R.tail.k)) {
                    if (v.prime && p > v.prime->p) break;
                    for (auto& P : primes_in_comp(R.K, c, p)) {
                        if (R.exception(P)) continue;
                        v.checked.push_back(P);
                        Modulus m = ideal_power(P, R.tail.k);
                        if (m.contains(y)) violate(P, m.index(xc));
                    }
                }
            }
        }
    }
    std::sort(v.checked.begin(), v.checked.end(), [](const PrimeIdeal& a, const PrimeIdeal& b) {
        return a.p != b.p ? a.p < b.p : a.slot < b.slot;
    });
    v.checked.erase(std::unique(v.checked.begin(), v.checked.end()), v.checked.end());
    return v;
}

bool is_member(const SieveSpec& R, const Elem& x) { return membership(R, x).member; }

std::vector<Elem> enumerate_V(const SieveSpec& R, i64 B) {
    if (!R.non_large) throw Error(ErrorKind::PreconditionFailed, "sieve is large");
    std::vector<Elem> out;
    for_each_in_box(R.K.degree, B, [&](const Elem& x) {
        if (is_member(R, x)) out.push_back(x);
    });
    return out;
}

i64 count_V(const SieveSpec& R, i64 B, int threads) {
    if (!R.non_large) throw Error(ErrorKind::PreconditionFailed, "sieve is large");
    int n = R.K.degree;
    threads = std::max(1, std::min<int>(threads, static_cast<int>(2 * B + 1)));
    std::vector<i64> counts(threads, 0);
    auto work = [&](int t) {
        // shard on the first coordinate
        for (i64 a = -B + t; a <= B; a += threads) {
            if (n == 1) {
                counts[t] += is_member(R, Elem{a});
                continue;
            }
            for_each_in_box(n - 1, B, [&](const Elem& rest) {
                Elem x;
                x.reserve(n);
                x.push_back(a);
                x.insert(x.end(), rest.begin(), rest.end());
                counts[t] += is_member(R, x);
            });
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    i64 total = 0;
    for (i64 c : counts) total += c;
    return total;
}

Interval density_interval(const SieveSpec& R, i64 P) {
    if (!R.non_large) throw Error(ErrorKind::PreconditionFailed, "sieve is large");
    if (!R.tail.boundable())
        throw Error(ErrorKind::TailNotBoundable, "tail " + R.tail.to_string(R.K) + " has a divergent measure sum");
    long double T = 1;
    long double ops = 0;
    for (const auto& [Q, L] : R.exceptions) {
        if (L.count() == 0) continue;
        T *= 1.0L - L.measure();
        ops += 2;
    }
    if (R.tail.kind == TailRule::Kind::Empty) {
        long double pad = ops * std::ldexp(T, -60);
        return {T - pad, T + pad};
    }
    for (i64 p : primes_up_to(P)) {
        for (auto& Q : split_prime(R.K, p)) {
            if (Q.norm() > P || R.exception(Q)) continue;
            LocalSet L = tail_local_set(R, Q);
            T *= 1.0L - L.measure();
            ops += 2;
        }
    }
    int k = R.tail.k;
    long double m = static_cast<long double>(tail_residues(R.tail, R.K).size());
    long double deg = R.K.degree;
    // sum over Nm(P) > P of meas(R_P) <= m * deg * sum_{t > P} t^-k <= m * deg * P^(1-k)/(k-1)
    long double S = m * deg * std::pow(static_cast<long double>(P), 1 - k) / (k - 1);
    long double mu0 = m / std::pow(static_cast<long double>(P + 1), k);
    long double lo = T * std::max(0.0L, 1.0L - S / (1.0L - mu0));
    long double pad = (ops + 16) * std::ldexp(T, -60);
    return {std::max(0.0L, lo - pad), T + pad};
}

i64 tail_count(const EtaleAlgebra& K, int k, i64 X, i64 M) {
    if (k < 2) throw Error(ErrorKind::InvalidArgument, "tail_count needs k >= 2");
    i64 count = 0;
    for_each_in_box(K.degree, X, [&](const Elem& x) {
        bool zero = true;
        for (i64 v : x) zero = zero && v == 0;
        if (zero) return;
        // norm of the largest ideal a with a^k | x
        i128 na = 1;
        bool infinite = false;
        for (int c = 0; c < K.size() && !infinite; ++c) {
            Coord xc = K.coord(x, c);
            if (xc.a == 0 && xc.b == 0) {
                infinite = true;
                break;
            }
            i64 N = field_norm(K.comps[c], xc);
            for (i64 p : prime_power_divisors(N, k))
                for (auto& P : primes_in_comp(K, c, p)) {
                    int v = valuation(xc, P) / k;
                    for (int i = 0; i < v; ++i) na *= P.norm();
                }
        }
        if (infinite || na > M) ++count;
    });
    return count;
}

// ---- text format ----

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char ch : s) {
        if (ch == '[') ++depth;
        if (ch == ']') --depth;
        if (ch == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

} // namespace

SieveSpec parse_sieve(const std::string& text) {
    std::optional<EtaleAlgebra> K;
    TailRule tail;
    std::vector<ExceptionSpec> exc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
        line = trim(line);
        if (line.empty() || line == "exceptions") continue;
        std::istringstream ls(line);
        std::string head;
        ls >> head;
        if (head == "algebra") {
            std::string rest;
            std::getline(ls, rest);
            K = parse_algebra(rest);
        } else if (head == "tail") {
            if (!K) fail("tail before algebra");
            std::string kind;
            ls >> kind;
            if (kind == "empty") {
                tail = TailRule::empty();
            } else if (kind == "kfree") {
                int k = 0;
                if (!(ls >> k)) fail("kfree needs an exponent");
                tail = TailRule::kfree(k);
            } else if (kind == "residues") {
                std::string rest;
                std::getline(ls, rest);
                auto colon = rest.find(':');
                if (colon == std::string::npos) fail("residues tail needs ':'");
                int k = std::stoi(trim(rest.substr(0, colon)));
                std::vector<Elem> rs;
                for (auto& item : split(rest.substr(colon + 1), ',')) rs.push_back(parse_elem(*K, item));
                tail = TailRule::residue_classes(k, rs);
            } else {
                fail("unknown tail '" + kind + "'");
            }
        } else {
            if (!K) fail("exception before algebra");
            auto colon = line.find(':');
            if (colon == std::string::npos) fail("expected 'p [index] k : classes'");
            std::istringstream hs(line.substr(0, colon));
            std::vector<i64> nums;
            i64 v;
            while (hs >> v) nums.push_back(v);
            if (!hs.eof() || nums.size() < 2 || nums.size() > 3) fail("expected 'p [index] k : classes'");
            ExceptionSpec e;
            e.p = nums[0];
            e.slot = nums.size() == 3 ? static_cast<int>(nums[1]) : 0;
            e.k = static_cast<int>(nums.back());
            auto ps = split_prime(*K, e.p);
            if (e.slot < 0 || e.slot >= static_cast<int>(ps.size())) fail("no such prime index");
            const FieldSpec& f = ps[e.slot].field;
            for (auto& item : split(line.substr(colon + 1), ',')) e.classes.push_back(parse_coord(f, item));
            exc.push_back(e);
        }
    }
    if (!K) throw Error(ErrorKind::Parse, "missing algebra line");
    return build_sieve(*K, tail, exc);
}

SieveSpec load_sieve(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_sieve(ss.str());
}

std::string format_sieve(const SieveSpec& R) {
    std::string s = "algebra " + R.K.to_string() + "\ntail " + R.tail.to_string(R.K) + "\n";
    if (!R.exceptions.empty()) s += "exceptions\n";
    for (const auto& [P, L] : R.exceptions) {
        s += std::to_string(P.p) + " " + std::to_string(P.slot) + " " + std::to_string(L.mod.k) + " :";
        for (size_t i = 0; i < L.classes.size(); ++i)
            s += (i ? "," : " ") + format_coord(P.field, L.mod.from_index(L.classes[i]));
        s += "\n";
    }
    return s;
}

} // namespace kfree
