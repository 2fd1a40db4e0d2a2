#pragma once

/// PCTL abstract syntax.

#include <charconv>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>

namespace deonpol::pctl {

/// Probability interval J, endpoints in [0,1], each end open or closed.
struct ProbBound {
    double lower = 0.0;
    double upper = 1.0;
    bool lower_open = false;
    bool upper_open = false;

    /// Boundary band: a value within tol of a closed endpoint counts as inside.
    bool contains(double x, double tol = 1e-9) const {
        bool lo = lower_open ? x > lower + tol : x >= lower - tol;
        bool hi = upper_open ? x < upper - tol : x <= upper + tol;
        return lo && hi;
    }
    /// The shape P>=lambda.
    bool is_lower_closed_only() const { return !lower_open && upper == 1.0 && !upper_open; }
    /// Interval of 1 - x for x in this interval.
    ProbBound complement() const { return {1.0 - upper, 1.0 - lower, upper_open, lower_open}; }

    friend bool operator==(const ProbBound&, const ProbBound&) = default;
};

struct PathFormula;
struct StateFormula;
using StatePtr = std::shared_ptr<const StateFormula>;
using PathPtr = std::shared_ptr<const PathFormula>;

struct StateFormula {
    enum class Kind { True, Atom, Not, And, Prob };
    Kind kind = Kind::True;
    std::string atom;
    StatePtr left, right;  // Not uses left; And uses both
    ProbBound bound;
    PathPtr path;
};

struct PathFormula {
    enum class Kind { Next, Until, BoundedUntil };
    Kind kind = Kind::Until;
    StatePtr left, right;  // Next uses right
    std::size_t steps = 0;
};

inline StatePtr make_true() { return std::make_shared<StateFormula>(); }
inline StatePtr make_atom(std::string name) {
    auto f = std::make_shared<StateFormula>();
    f->kind = StateFormula::Kind::Atom;
    f->atom = std::move(name);
    return f;
}
inline StatePtr make_not(StatePtr a) {
    auto f = std::make_shared<StateFormula>();
    f->kind = StateFormula::Kind::Not;
    f->left = std::move(a);
    return f;
}
inline StatePtr make_and(StatePtr a, StatePtr b) {
    auto f = std::make_shared<StateFormula>();
    f->kind = StateFormula::Kind::And;
    f->left = std::move(a);
    f->right = std::move(b);
    return f;
}
inline StatePtr make_prob(ProbBound j, PathPtr p) {
    auto f = std::make_shared<StateFormula>();
    f->kind = StateFormula::Kind::Prob;
    f->bound = j;
    f->path = std::move(p);
    return f;
}
inline PathPtr make_next(StatePtr a) {
    auto p = std::make_shared<PathFormula>();
    p->kind = PathFormula::Kind::Next;
    p->right = std::move(a);
    return p;
}
inline PathPtr make_until(StatePtr a, StatePtr b) {
    auto p = std::make_shared<PathFormula>();
    p->kind = PathFormula::Kind::Until;
    p->left = std::move(a);
    p->right = std::move(b);
    return p;
}
inline PathPtr make_bounded_until(StatePtr a, StatePtr b, std::size_t n) {
    auto p = std::make_shared<PathFormula>();
    p->kind = PathFormula::Kind::BoundedUntil;
    p->left = std::move(a);
    p->right = std::move(b);
    p->steps = n;
    return p;
}

bool equal(const StateFormula& a, const StateFormula& b);

inline bool equal(const PathFormula& a, const PathFormula& b) {
    if (a.kind != b.kind || a.steps != b.steps) return false;
    auto same = [](const StatePtr& x, const StatePtr& y) { return (!x && !y) || (x && y && equal(*x, *y)); };
    return same(a.left, b.left) && same(a.right, b.right);
}

/// Structural equality.
inline bool equal(const StateFormula& a, const StateFormula& b) {
    if (a.kind != b.kind) return false;
    using K = StateFormula::Kind;
    switch (a.kind) {
        case K::True: return true;
        case K::Atom: return a.atom == b.atom;
        case K::Not: return equal(*a.left, *b.left);
        case K::And: return equal(*a.left, *b.left) && equal(*a.right, *b.right);
        case K::Prob: return a.bound == b.bound && equal(*a.path, *b.path);
    }
    return false;
}

std::string to_string(const StateFormula& f);

/// Shortest round-trip decimal form.
inline std::string number_to_string(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string bound_to_string(const ProbBound& j) {
    std::ostringstream os;
    if (j.upper == 1.0 && !j.upper_open) {
        os << (j.lower_open ? ">" : ">=") << number_to_string(j.lower);
    } else if (j.lower == 0.0 && !j.lower_open) {
        os << (j.upper_open ? "<" : "<=") << number_to_string(j.upper);
    } else {
        os << (j.lower_open ? "(" : "[") << number_to_string(j.lower) << "," << number_to_string(j.upper)
           << (j.upper_open ? ")" : "]");
    }
    return os.str();
}

inline std::string to_string(const PathFormula& p) {
    switch (p.kind) {
        case PathFormula::Kind::Next: return "X " + to_string(*p.right);
        case PathFormula::Kind::Until: return to_string(*p.left) + " U " + to_string(*p.right);
        case PathFormula::Kind::BoundedUntil:
            return to_string(*p.left) + " U<=" + std::to_string(p.steps) + " " + to_string(*p.right);
    }
    return {};
}

/// Canonical concrete syntax; reparses to an equal tree.
inline std::string to_string(const StateFormula& f) {
    using K = StateFormula::Kind;
    switch (f.kind) {
        case K::True: return "true";
        case K::Atom: return f.atom;
        case K::Not: return "!" + to_string(*f.left);
        case K::And: return "(" + to_string(*f.left) + " & " + to_string(*f.right) + ")";
        case K::Prob: return "P" + bound_to_string(f.bound) + " [ " + to_string(*f.path) + " ]";
    }
    return {};
}

}  // namespace deonpol::pctl
