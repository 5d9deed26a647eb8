// Z-linear maps between rings of integers and their local sieve conditions.
#ifndef KFREE_LINMAPS_HPP
#define KFREE_LINMAPS_HPP

#include <optional>
#include <string>
#include <vector>

#include "kfree/sieve.hpp"

namespace kfree {

using IntMatrix = std::vector<std::vector<i64>>;

// Integer matrix (deg L x deg K) over the fixed integral bases.
struct ZLinearMap {
    EtaleAlgebra src, dst;
    IntMatrix m;

    Elem apply(const Elem& x) const;
    bool square() const { return src.degree == dst.degree; }
    i64 det() const; // square maps only
    std::string to_string() const;
};

ZLinearMap make_map(const EtaleAlgebra& K, const EtaleAlgebra& L, const IntMatrix& rows);
ZLinearMap identity_map(const EtaleAlgebra& K);
ZLinearMap hom_map(const AlgebraHom& tau);
// x -> eps * x on L
ZLinearMap mult_map(const EtaleAlgebra& L, const Elem& eps);
ZLinearMap compose(const ZLinearMap& outer, const ZLinearMap& inner);
// Parse "a,b;c,d" (row-major, rows separated by ';').
IntMatrix parse_matrix(const std::string& text);

// {x in Z^n : form . x = 0 mod modulus for every congruence}, as HNF rows.
struct Congruence {
    std::vector<i64> form;
    i64 modulus = 1;
};
IntMatrix congruence_lattice(int n, const std::vector<Congruence>& cs);
i64 lattice_index(const IntMatrix& hnf);

struct InducedMap {
    i64 p = 2;
    int k = 1;
    i64 modulus = 2;        // p^k
    IntMatrix m;            // entries reduced mod p^k
    bool bijective = false;

    // Class x with coordinates in [0, p^k).
    Elem apply(const Elem& x) const;
    // Full table on class indices (sum x_i p^(k i)); throws BudgetExceeded
    // past the given number of classes.
    std::vector<i64> table(i64 budget = 1 << 22) const;
};
InducedMap induced_mod(const ZLinearMap& A, i64 p, int k);

struct LocalCheck {
    bool holds = true;
    std::optional<Elem> witness; // class of V_p(K,R) mapped outside V_p(L,S)
    i64 exponent = 1;            // classes are taken mod p^exponent
    std::string method;          // "exhaustive" or "lattice"
};
LocalCheck check_local_condition(const ZLinearMap& A, const SieveSpec& R, const SieveSpec& S, i64 p,
                                 i64 budget = 100000000);

struct PrimeScan {
    std::optional<i64> prime;   // first violating prime
    std::optional<Elem> witness;
    i64 checked = 0;            // primes examined
};
PrimeScan scan_primes(const ZLinearMap& A, const SieveSpec& R, const SieveSpec& S, i64 P, i64 budget = 100000000);

struct MonomialDecomposition {
    AlgebraHom tau;
    Elem eps;
};
std::optional<MonomialDecomposition> decompose_monomial(const ZLinearMap& A);

struct Preserver {
    IntMatrix m;
    bool monomial = false;
};
// Matrices over F_q (q prime) with A((F^x)^n) inside (F^x)^m; only
// invertible ones when n == m.
std::vector<Preserver> preserver_scan(i64 q, int n, int m, i64 budget = 50000000);

// Smallest t mod p^k with a_i + t x_i outside R_i for every i.
i64 cover_witness(i64 p, int k, const std::vector<i64>& x, const std::vector<i64>& a,
                  const std::vector<std::vector<i64>>& R);

struct UnitCheck {
    bool holds = true;
    std::optional<Elem> unit, image;
    i64 tested = 0;
};
UnitCheck check_unit_preservation(const ZLinearMap& A, i64 H);

} // namespace kfree

#endif
