// Rings of integers of products of Q and quadratic fields.
#ifndef KFREE_RINGS_HPP
#define KFREE_RINGS_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kfree/common.hpp"

namespace kfree {

// Q, or Q(sqrt d) with integral basis {1, w}.
struct FieldSpec {
    enum class Kind { Rational, Quadratic };
    Kind kind = Kind::Rational;
    i64 d = 1;

    static FieldSpec rational() { return {}; }
    static FieldSpec quadratic(i64 d);

    bool is_rational() const { return kind == Kind::Rational; }
    int degree() const { return is_rational() ? 1 : 2; }
    // w^2 = t*w + n
    i64 t() const { return (!is_rational() && mod(d, 4) == 1) ? 1 : 0; }
    i64 n() const;
    i64 disc() const;
    bool real() const { return is_rational() || d > 0; }
    std::string to_string() const;
    bool operator==(const FieldSpec& o) const { return kind == o.kind && d == o.d; }
};

// Coordinates of an element of a single component, over {1} or {1, w}.
struct Coord {
    i64 a = 0, b = 0;
    bool operator==(const Coord& o) const { return a == o.a && b == o.b; }
    bool operator<(const Coord& o) const { return a != o.a ? a < o.a : b < o.b; }
};

Coord field_mul(const FieldSpec& f, Coord x, Coord y);
i64 field_norm(const FieldSpec& f, Coord x);
Coord field_conj(const FieldSpec& f, Coord x);
long double field_real_value(const FieldSpec& f, Coord x); // real embedding, real fields only

// Element of the algebra: flat coordinate vector over the concatenated bases.
using Elem = std::vector<i64>;

struct EtaleAlgebra {
    std::vector<FieldSpec> comps;
    std::vector<int> offset;
    int degree = 0;

    int size() const { return static_cast<int>(comps.size()); }
    Coord coord(const Elem& x, int c) const;
    void set_coord(Elem& x, int c, Coord v) const;
    Elem zero() const { return Elem(static_cast<size_t>(degree), 0); }
    Elem one() const;
    Elem from_int(i64 v) const;
    Elem mul(const Elem& x, const Elem& y) const;
    Elem add(const Elem& x, const Elem& y) const;
    Elem sub(const Elem& x, const Elem& y) const;
    Elem neg(const Elem& x) const;
    std::vector<i64> norms(const Elem& x) const;
    std::string to_string() const;
    std::string format(const Elem& x) const;
    bool operator==(const EtaleAlgebra& o) const { return comps == o.comps; }
};

i64 height(const Elem& x);

enum class SplitKind { Split, Inert, Ramified };
const char* split_name(SplitKind s);

struct PrimeIdeal {
    int comp = 0;
    FieldSpec field;
    i64 p = 0;
    SplitKind kind = SplitKind::Split;
    int e = 1, f = 1;
    i64 root = 0;   // root of the minimal polynomial of w mod p (split and ramified)
    int slot = 0;   // position in split_prime(K, p)
    i64 norm() const { return f == 1 ? p : p * p; }
    std::string to_string() const;
    bool operator==(const PrimeIdeal& o) const { return comp == o.comp && p == o.p && slot == o.slot; }
    bool operator<(const PrimeIdeal& o) const {
        return p != o.p ? p < o.p : slot < o.slot;
    }
};

// p^k as a sublattice of the component's coordinate lattice. HNF rows are
// (h11, 0) and (h21, h22); for Q components h21 = 0 and h22 = 1.
struct Modulus {
    PrimeIdeal prime;
    int k = 1;
    int dim = 1;
    i64 h11 = 1, h21 = 0, h22 = 1;
    i64 norm = 1;

    bool contains(Coord x) const;
    Coord reduce(Coord x) const;
    i64 index(Coord x) const; // index of the canonical representative, in [0, norm)
    Coord from_index(i64 i) const { return {i % h11, dim == 2 ? i / h11 : 0}; }
};

EtaleAlgebra make_algebra(const std::vector<FieldSpec>& spec);
EtaleAlgebra parse_algebra(const std::string& text);
// `a+b*w` per component, components as `[x;y]`.
Elem parse_elem(const EtaleAlgebra& K, const std::string& text);
Coord parse_coord(const FieldSpec& f, const std::string& text);
std::string format_coord(const FieldSpec& f, Coord x);

std::vector<PrimeIdeal> split_prime(const EtaleAlgebra& K, i64 p);
Modulus ideal_power(const PrimeIdeal& P, int k);
// Reduce a component element modulo m. Throws ComponentMismatch on size mismatch.
Elem reduce_mod(const Elem& xc, const Modulus& m);
// Valuation of a nonzero component element at P.
int valuation(Coord x, const PrimeIdeal& P);

// Per target component j: the source component it factors through and, for
// quadratic sources, the image of w in L_j.
struct AlgebraHom {
    EtaleAlgebra src, dst;
    std::vector<int> src_comp;
    std::vector<Coord> w_image;

    Elem apply(const Elem& x) const;
    bool is_isomorphism() const;
    // deg L x deg K integer matrix over the fixed bases
    std::vector<std::vector<i64>> matrix() const;
    std::string to_string() const;
};

std::vector<AlgebraHom> algebra_homs(const EtaleAlgebra& K, const EtaleAlgebra& L);

// Fundamental unit > 1 of a real quadratic field.
Coord fundamental_unit(const FieldSpec& f);

struct UnitList {
    std::vector<Elem> units;
    std::vector<std::optional<Coord>> fundamental; // per component
};
// All units of height <= H. Real quadratic components are listed as
// +-eps^j with j in the order 0, -1, 1, -2, 2, ...
UnitList units_up_to(const EtaleAlgebra& K, i64 H);

} // namespace kfree

#endif
