// Strong approximation inside V(K,R) and surjectivity of V_{K,k} -> V_{K,k,p}.
#ifndef KFREE_LOCALGLOBAL_HPP
#define KFREE_LOCALGLOBAL_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "kfree/sieve.hpp"

namespace kfree {

struct CongruenceConstraint {
    PrimeIdeal prime;
    int k = 1;
    Coord target; // reduced to its canonical representative by solve
};

// Multipliers z in Z^n with max |z_i| = h, lexicographic with each
// coordinate ordered 0, 1, -1, 2, -2, ...
std::vector<Elem> multiplier_shell(int n, i64 h);

// Intersection of cosets t_i + P_i^{k_i} inside one component.
struct CosetLattice {
    int dim = 1;
    i64 h11 = 1, h21 = 0, h22 = 1;
    Coord base; // canonical: 0 <= a < h11, 0 <= b < h22
};
CosetLattice intersect_cosets(const FieldSpec& f, const std::vector<std::pair<Modulus, Coord>>& cosets);

struct SolveOptions {
    i64 bound = 64;                   // largest multiplier shell scanned
    bool allow_unboundable = false;   // scan even when the tail is KFree(1)
    std::vector<Elem> skip;           // candidates never returned
};

struct SolveResult {
    bool found = false;
    Elem y;
    Elem base;        // CRT base point
    Elem multiplier;  // z with y = base + z * (combined lattice)
    i64 tried = 0;    // candidates tested, including y
};

// y in V(K,R) with y = x_P mod P^k for every constraint, scanning the base
// point plus lattice multiples in shell order. found == false means the
// bound was exhausted.
SolveResult solve(const SieveSpec& R, const std::vector<CongruenceConstraint>& cs, const SolveOptions& opt = {});

struct SurjectivityReport {
    static constexpr std::uint8_t kExcluded = 255; // class not in V_{K,k,p}
    static constexpr std::uint8_t kMissing = 254;  // no witness within the bound

    EtaleAlgebra K;
    int k = 2;
    i64 p = 2;
    i64 pk = 4;
    i64 total = 0;      // p^(k n)
    i64 local = 0;      // classes of V_{K,k,p}
    i64 witnessed = 0;
    i64 max_height = 0;
    std::vector<std::uint8_t> status;  // per class: multiplier index or a flag
    std::vector<Elem> multipliers;

    bool ok() const { return witnessed == local; }
    // class index = sum c_i p^(k i) over the flat coordinates
    Elem class_rep(i64 idx) const;
    bool excluded(i64 idx) const { return status[static_cast<size_t>(idx)] == kExcluded; }
    std::optional<Elem> witness(i64 idx) const;
};

// For every class mod p^k O_K not divisible by any P^k with P | p, the
// first k-free element c + p^k z in shell order of z.
SurjectivityReport check_local_surjectivity(const EtaleAlgebra& K, int k, i64 p, i64 bound = 6);

} // namespace kfree

#endif
