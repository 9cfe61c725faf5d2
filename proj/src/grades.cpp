#include "gsess/grades.hpp"

namespace gsess {

std::string ExtNat::str() const { return inf_ ? "Inf" : std::to_string(k_); }

ExtNat ext_min(ExtNat a, ExtNat b) { return a <= b ? a : b; }
ExtNat ext_max(ExtNat a, ExtNat b) { return a <= b ? b : a; }

Grade Grade::nat(unsigned long k) {
    return Grade(SemiringTag::NatS, k, ExtNat::of(0), ExtNat::of(0));
}

Grade Grade::interval(ExtNat lo, ExtNat hi) {
    if (lo.is_infinite()) throw std::logic_error("Grade: interval lower bound must be finite");
    if (!(lo <= hi)) throw std::logic_error("Grade: interval requires lo <= hi");
    return Grade(SemiringTag::IntervalS, 0, lo, hi);
}

unsigned long Grade::nat_value() const {
    if (tag_ != SemiringTag::NatS) throw SemiringMismatch();
    return nat_;
}
ExtNat Grade::lo() const {
    if (tag_ != SemiringTag::IntervalS) throw SemiringMismatch();
    return lo_;
}
ExtNat Grade::hi() const {
    if (tag_ != SemiringTag::IntervalS) throw SemiringMismatch();
    return hi_;
}

bool Grade::operator==(const Grade& other) const {
    if (tag_ != other.tag_) return false;
    if (tag_ == SemiringTag::NatS) return nat_ == other.nat_;
    return lo_ == other.lo_ && hi_ == other.hi_;
}

std::string Grade::str() const {
    if (tag_ == SemiringTag::NatS) return std::to_string(nat_);
    return lo_.str() + ".." + hi_.str();
}

Grade grade_zero(SemiringTag s) {
    return s == SemiringTag::NatS ? Grade::nat(0) : Grade::interval(ExtNat::of(0), ExtNat::of(0));
}

Grade grade_one(SemiringTag s) {
    return s == SemiringTag::NatS ? Grade::nat(1) : Grade::interval(ExtNat::of(1), ExtNat::of(1));
}

Grade grade_add(const Grade& a, const Grade& b) {
    if (a.tag() != b.tag()) throw SemiringMismatch();
    if (a.tag() == SemiringTag::NatS) return Grade::nat(a.nat_value() + b.nat_value());
    return Grade::interval(a.lo() + b.lo(), a.hi() + b.hi());
}

Grade grade_mul(const Grade& a, const Grade& b) {
    if (a.tag() != b.tag()) throw SemiringMismatch();
    if (a.tag() == SemiringTag::NatS) return Grade::nat(a.nat_value() * b.nat_value());
    return Grade::interval(a.lo() * b.lo(), a.hi() * b.hi());
}

bool grade_approx(const Grade& usage, const Grade& declared) {
    if (usage.tag() != declared.tag()) throw SemiringMismatch();
    if (usage.tag() == SemiringTag::NatS) return usage.nat_value() == declared.nat_value();
    return declared.lo() <= usage.lo() && usage.hi() <= declared.hi();
}

std::optional<Grade> grade_join(const Grade& a, const Grade& b) {
    if (a.tag() != b.tag()) throw SemiringMismatch();
    if (a.tag() == SemiringTag::NatS) {
        if (a.nat_value() != b.nat_value()) return std::nullopt;
        return a;
    }
    return Grade::interval(ext_min(a.lo(), b.lo()), ext_max(a.hi(), b.hi()));
}

Grade embed_nat(unsigned long k) { return Grade::interval(ExtNat::of(k), ExtNat::of(k)); }

}  // namespace gsess
