// Dedekind zeta values and the patch-counting entropy of admissible shifts.
#ifndef KFREE_ENTROPY_HPP
#define KFREE_ENTROPY_HPP

#include "kfree/sieve.hpp"

namespace kfree {

// Enclosure of zeta_K(s): Euler factors for Nm(P) <= cutoff, and a tail bound
// from at most deg(K) primes of each norm.
Interval zeta_K(const EtaleAlgebra& K, int s, i64 cutoff);

// log 2 * prod_P (1 - meas(R_P)), enclosed.
Interval entropy_product(const SieveSpec& R, i64 cutoff);

// log(#admissible subsets of [0, N)^n) / N^n.
long double empirical_entropy(const SieveSpec& R, i64 N);

} // namespace kfree

#endif
