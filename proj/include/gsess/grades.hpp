#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace gsess {

// Naturals extended with infinity. Addition and multiplication saturate at
// infinity; 0 * Inf = 0 so annihilation survives the extension.
class ExtNat {
public:
    ExtNat() : inf_(false), k_(0) {}
    static ExtNat of(unsigned long k) { return ExtNat(false, k); }
    static ExtNat infinity() { return ExtNat(true, 0); }

    bool is_infinite() const { return inf_; }
    unsigned long finite() const {
        if (inf_) throw std::logic_error("ExtNat: finite() on infinity");
        return k_;
    }

    friend ExtNat operator+(ExtNat a, ExtNat b) {
        if (a.inf_ || b.inf_) return infinity();
        return of(a.k_ + b.k_);
    }
    friend ExtNat operator*(ExtNat a, ExtNat b) {
        if ((!a.inf_ && a.k_ == 0) || (!b.inf_ && b.k_ == 0)) return of(0);
        if (a.inf_ || b.inf_) return infinity();
        return of(a.k_ * b.k_);
    }
    friend bool operator==(ExtNat a, ExtNat b) {
        return a.inf_ == b.inf_ && (a.inf_ || a.k_ == b.k_);
    }
    friend bool operator!=(ExtNat a, ExtNat b) { return !(a == b); }
    // finite(k) < infinity for every k
    friend bool operator<=(ExtNat a, ExtNat b) {
        if (b.inf_) return true;
        if (a.inf_) return false;
        return a.k_ <= b.k_;
    }

    std::string str() const;

private:
    ExtNat(bool inf, unsigned long k) : inf_(inf), k_(k) {}
    bool inf_;
    unsigned long k_;
};

ExtNat ext_min(ExtNat a, ExtNat b);
ExtNat ext_max(ExtNat a, ExtNat b);

enum class SemiringTag { NatS, IntervalS };

struct SemiringMismatch : std::runtime_error {
    SemiringMismatch() : std::runtime_error("semiring mismatch between grades") {}
};

// An element of one of the two grade semirings: exact naturals, or intervals
// over extended naturals (lower bounds always finite).
class Grade {
public:
    static Grade nat(unsigned long k);
    static Grade interval(ExtNat lo, ExtNat hi);  // requires lo finite, lo <= hi

    SemiringTag tag() const { return tag_; }
    unsigned long nat_value() const;
    ExtNat lo() const;
    ExtNat hi() const;

    bool operator==(const Grade& other) const;
    std::string str() const;

private:
    Grade(SemiringTag tag, unsigned long n, ExtNat lo, ExtNat hi)
        : tag_(tag), nat_(n), lo_(lo), hi_(hi) {}
    SemiringTag tag_;
    unsigned long nat_;
    ExtNat lo_, hi_;
};

Grade grade_zero(SemiringTag s);
Grade grade_one(SemiringTag s);
Grade grade_add(const Grade& a, const Grade& b);  // throws SemiringMismatch
Grade grade_mul(const Grade& a, const Grade& b);  // throws SemiringMismatch

// usage `approx` declared: NatS is equality; IntervalS is containment of the
// usage interval in the declared interval.
bool grade_approx(const Grade& usage, const Grade& declared);

// Least upper bound of usages across branches. NatS is defined only for equal
// grades; IntervalS is the bound-wise hull.
std::optional<Grade> grade_join(const Grade& a, const Grade& b);

// Embed an exact natural into the interval semiring as [k..k].
Grade embed_nat(unsigned long k);

}  // namespace gsess
