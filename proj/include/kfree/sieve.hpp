// Finitely specified sieves, membership in V(K,R), densities and tail counts.
#ifndef KFREE_SIEVE_HPP
#define KFREE_SIEVE_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kfree/rings.hpp"

namespace kfree {

// Rule for every prime without an explicit exception. Residues means
// R_P = {r mod P^k : r in residues}; KFree(k) is Residues with {0}.
struct TailRule {
    enum class Kind { Empty, KFree, Residues };
    Kind kind = Kind::Empty;
    int k = 1;
    std::vector<Elem> residues;

    static TailRule empty() { return {}; }
    static TailRule kfree(int k);
    static TailRule residue_classes(int k, std::vector<Elem> residues);
    bool boundable() const { return kind == Kind::Empty || k >= 2; }
    std::string to_string(const EtaleAlgebra& K) const;
};

struct LocalSet {
    Modulus mod;
    std::vector<i64> classes; // sorted canonical indices

    i64 count() const { return static_cast<i64>(classes.size()); }
    long double measure() const { return static_cast<long double>(count()) / mod.norm; }
    bool contains(Coord x) const;
    bool contains_index(i64 idx) const;
    bool is_zero_class() const { return classes.size() == 1 && classes[0] == 0; }
};

struct ExceptionSpec {
    i64 p = 2;
    int slot = 0;   // index into split_prime(K, p)
    int k = 1;
    std::vector<Coord> classes;
};

struct SieveSpec {
    EtaleAlgebra K;
    TailRule tail;
    std::vector<std::pair<PrimeIdeal, LocalSet>> exceptions; // sorted by prime
    bool non_large = true;
    bool cofinite = true;

    const LocalSet* exception(const PrimeIdeal& P) const;
};

SieveSpec build_sieve(const EtaleAlgebra& K, const TailRule& tail, const std::vector<ExceptionSpec>& exceptions);
SieveSpec kfree_sieve(const EtaleAlgebra& K, int k);
LocalSet local_set(const SieveSpec& R, const PrimeIdeal& P);

struct Verdict {
    bool member = true;
    std::optional<PrimeIdeal> prime; // violating prime
    i64 class_index = -1;            // class of x in R_P
    std::vector<PrimeIdeal> checked;
};

Verdict membership(const SieveSpec& R, const Elem& x);
bool is_member(const SieveSpec& R, const Elem& x);

std::vector<Elem> enumerate_V(const SieveSpec& R, i64 B);
// Number of members with height <= B, without materializing them.
i64 count_V(const SieveSpec& R, i64 B, int threads = 1);

struct Interval {
    long double lo = 0, hi = 0;
    bool contains(long double v) const { return lo <= v && v <= hi; }
    long double width() const { return hi - lo; }
    long double mid() const { return (lo + hi) / 2; }
};

Interval density_interval(const SieveSpec& R, i64 P);

i64 tail_count(const EtaleAlgebra& K, int k, i64 X, i64 M);

// Iterate the box [-B, B]^n in lexicographic order.
template <class F>
void for_each_in_box(int n, i64 B, F&& f) {
    Elem x(static_cast<size_t>(n), -B);
    while (true) {
        f(const_cast<const Elem&>(x));
        int i = n - 1;
        while (i >= 0 && x[i] == B) x[i--] = -B;
        if (i < 0) return;
        ++x[i];
    }
}

SieveSpec parse_sieve(const std::string& text);
SieveSpec load_sieve(const std::string& path);
std::string format_sieve(const SieveSpec& R);

} // namespace kfree

#endif
