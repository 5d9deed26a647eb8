// Admissible patterns, block codes and morphisms of admissible shift spaces.
#ifndef KFREE_SHIFTSPACE_HPP
#define KFREE_SHIFTSPACE_HPP

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kfree/linmaps.hpp"
#include "kfree/localglobal.hpp"

namespace kfree {

// Finite subset of O_K, sorted and without repeats.
using Pattern = std::vector<Elem>;
Pattern make_pattern(std::vector<Elem> pts);
Pattern translate(const Pattern& X, const Elem& g);
bool contains(const Pattern& X, const Elem& x);

// Coordinate box, bounds inclusive.
struct Box {
    Elem lo, hi;
    bool contains(const Elem& x) const;
    std::vector<Elem> points() const;
};
Box cube(int n, i64 lo, i64 hi);

struct TranslateWitness {
    PrimeIdeal prime;
    LocalSet local;
    Coord delta; // (delta + R_P) is disjoint from X
};

struct AdmissibilityCertificate {
    bool admissible = true;
    std::vector<TranslateWitness> witnesses;
    std::optional<PrimeIdeal> violation;
    i64 prime_bound = 0; // tail primes above this have |X| meas(R_P) < 1
};
AdmissibilityCertificate is_admissible(const SieveSpec& R, const Pattern& X);
bool admissible(const SieveSpec& R, const Pattern& X);
// Smallest delta (by class index) with (delta + R_P) disjoint from X.
std::optional<Coord> avoiding_translate(const SieveSpec& R, const Pattern& X, const PrimeIdeal& P);

// Admissible subsets of pts, empty set included. Throws BudgetExceeded once
// more than `budget` sets have been produced.
std::vector<Pattern> admissible_subsets(const SieveSpec& R, const std::vector<Elem>& pts, i64 budget = 1 << 22);
// Number of admissible subsets of the box [0, N)^n.
i64 count_admissible(const SieveSpec& R, i64 N, i64 budget = i64(1) << 26);

// A(x) in f(X) iff X meets x + window exactly in x + T for some T in patterns.
struct WindowCode {
    ZLinearMap A;
    Pattern window;
    std::vector<Pattern> patterns;
};
WindowCode make_code(const ZLinearMap& A, Pattern window, std::vector<Pattern> patterns);
// PreconditionFailed if some pattern is not admissible for R.
void check_code(const WindowCode& code, const SieveSpec& R);

// Evaluates at every x with x + window inside `known`.
Pattern apply_block_code(const WindowCode& code, const Pattern& X, const Box& known);
// Exact image of a finite configuration.
Pattern apply_finite(const WindowCode& code, const Pattern& X);

struct RandomPatternOptions {
    int max_pieces = 4;
    i64 radius = 1; // pieces are subsets of [-radius, radius]^n
    i64 gap = 8;
};
// X = union of x_i + T_i with x_i placed by CRT away from R at the primes
// that could be covered, and the pieces spaced apart.
Pattern random_admissible(const SieveSpec& R, std::mt19937_64& rng, const RandomPatternOptions& opt = {});

struct IntertwinerReport {
    bool passed = true;
    int trials = 0;
    std::string failure;
    Pattern X;
    Elem g;
};
IntertwinerReport verify_intertwiner(const WindowCode& code, const SieveSpec& R, const SieveSpec& S, int trials,
                                     unsigned long long seed = 1);

// Same set of classes at a higher exponent.
LocalSet lift(const LocalSet& L, int k);
// R'_P = intersection over T of (-T + R_P).
LocalSet derived_local_set(const SieveSpec& R, const PrimeIdeal& P, const std::vector<Pattern>& patterns);
// Smallest delta (by class index) with S contained in / equal to delta + R.
std::optional<Coord> translate_subset(const LocalSet& S, const LocalSet& R);
std::optional<Coord> translate_of(const LocalSet& S, const LocalSet& R);

struct ConjugacyResult {
    enum class Verdict { Conjugate, NoWitnessUpToBound, NotConjugate };
    Verdict verdict = Verdict::NoWitnessUpToBound;
    std::optional<AlgebraHom> tau;
    std::optional<Elem> eps;
    std::vector<std::pair<PrimeIdeal, Coord>> deltas; // S_Q = delta + eps tau(R_P), Q = tau(P)
    std::vector<i64> checked;                         // rational primes examined
    bool tail_exact = false;                          // tails agree at every prime, not only the checked ones
    i64 tested = 0;                                   // (tau, eps) pairs tried
    std::string reason;
};
const char* verdict_name(ConjugacyResult::Verdict v);
ConjugacyResult conjugacy_search(const SieveSpec& R, const SieveSpec& S, i64 H, i64 tail_cutoff = 50);

struct SymmetryCandidate {
    WindowCode code;
    std::optional<Elem> translation; // f(X) = translation + X
};
// Codes with A = id and window [-W, W]^n passing the necessary conditions.
std::vector<SymmetryCandidate> symmetry_scan(const SieveSpec& R, i64 W, i64 budget = 1 << 20);

struct OrbitResult {
    bool found = false;
    Elem delta;
    std::vector<CongruenceConstraint> constraints;
    i64 tried = 0;
};
// Nonzero Delta with (-Delta + V_{K,k}) meeting M exactly in X.
OrbitResult orbit_approximation(const EtaleAlgebra& K, int k, const Pattern& X, const Pattern& M, i64 bound = 64);

} // namespace kfree

#endif
