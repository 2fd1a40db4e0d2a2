#pragma once

/**
 * Recursive-descent parser for PCTL state formulas.
 *
 *   state   := conj ('|' conj)*
 *   conj    := unary ('&' unary)*
 *   unary   := '!' unary | primary
 *   primary := 'true' | 'false' | ident | '(' state ')' | 'P' bound '[' path ']'
 *   bound   := ('>=' | '>' | '<=' | '<') number | ('[' | '(') number ',' number (']' | ')')
 *   path    := 'X' state | ('F' | 'G') steps? state | state 'U' steps? state
 *   steps   := '<=' integer
 *
 * F, G, false and | are sugar over the core grammar.
 */

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

#include "deonpol/errors.hpp"
#include "deonpol/pctl/formula.hpp"

namespace deonpol::pctl {

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : src_(text) {}

    StatePtr parse_all() {
        auto f = parse_state();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool at_end() {
        skip_ws();
        return pos_ >= src_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }
    bool accept(std::string_view tok) {
        skip_ws();
        if (src_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }
    void expect(std::string_view tok) {
        if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
    }
    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    /// Identifier at the cursor without consuming it.
    std::string_view peek_ident() {
        skip_ws();
        std::size_t end = pos_;
        if (end < src_.size() && ident_start(src_[end])) {
            while (end < src_.size() && ident_char(src_[end])) ++end;
        }
        return src_.substr(pos_, end - pos_);
    }
    /// Keyword followed by something other than an identifier character.
    bool accept_keyword(std::string_view kw) {
        if (peek_ident() != kw) return false;
        pos_ += kw.size();
        return true;
    }

    StatePtr parse_state() {
        auto f = parse_conj();
        while (accept("|")) {
            auto g = parse_conj();
            f = make_not(make_and(make_not(f), make_not(g)));
        }
        return f;
    }
    StatePtr parse_conj() {
        auto f = parse_unary();
        while (peek() == '&') {
            ++pos_;
            accept("&");  // tolerate &&
            f = make_and(f, parse_unary());
        }
        return f;
    }
    StatePtr parse_unary() {
        if (accept("!")) return make_not(parse_unary());
        return parse_primary();
    }

    /// 'P' starts a probability operator only when a bound follows.
    bool prob_follows() {
        skip_ws();
        if (peek_ident() != "P") return false;
        std::size_t k = pos_ + 1;
        while (k < src_.size() && std::isspace(static_cast<unsigned char>(src_[k]))) ++k;
        return k < src_.size() && (src_[k] == '>' || src_[k] == '<' || src_[k] == '[' || src_[k] == '(');
    }

    StatePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of formula");
        if (accept("(")) {
            auto f = parse_state();
            expect(")");
            return f;
        }
        if (prob_follows()) {
            ++pos_;
            auto j = parse_bound();
            expect("[");
            auto p = parse_path(j);
            expect("]");
            return p;
        }
        auto id = peek_ident();
        if (id.empty()) fail("expected a state formula");
        pos_ += id.size();
        if (id == "true") return make_true();
        if (id == "false") return make_not(make_true());
        return make_atom(std::string(id));
    }

    double parse_number() {
        skip_ws();
        std::size_t start = pos_;
        std::size_t end = pos_;
        while (end < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.' ||
                                     src_[end] == 'e' || src_[end] == 'E' || src_[end] == '-' || src_[end] == '+'))
            ++end;
        double v = 0.0;
        auto res = std::from_chars(src_.data() + start, src_.data() + end, v);
        if (res.ec != std::errc{} || res.ptr != src_.data() + end || end == start) fail("malformed probability bound");
        if (!(v >= 0.0 && v <= 1.0)) fail("probability bound outside [0,1]");
        pos_ = end;
        return v;
    }

    ProbBound parse_bound() {
        ProbBound j;
        if (accept(">=")) {
            j.lower = parse_number();
        } else if (accept(">")) {
            j.lower = parse_number();
            j.lower_open = true;
        } else if (accept("<=")) {
            j.upper = parse_number();
        } else if (accept("<")) {
            j.upper = parse_number();
            j.upper_open = true;
        } else if (peek() == '[' || peek() == '(') {
            j.lower_open = src_[pos_] == '(';
            ++pos_;
            j.lower = parse_number();
            expect(",");
            j.upper = parse_number();
            if (accept("]")) {
                j.upper_open = false;
            } else if (accept(")")) {
                j.upper_open = true;
            } else {
                fail("expected ']' or ')' closing the interval");
            }
            if (j.lower > j.upper) fail("empty probability interval");
        } else {
            fail("malformed probability bound");
        }
        return j;
    }

    std::size_t parse_steps() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < src_.size() && src_[pos_] == '-') fail("step bound n < 0");
        std::size_t end = pos_;
        while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
        if (end == start) fail("expected a non-negative integer step bound");
        if (end < src_.size() && (src_[end] == '.' || ident_char(src_[end]))) fail("step bound must be an integer");
        std::size_t n = 0;
        auto res = std::from_chars(src_.data() + start, src_.data() + end, n);
        if (res.ec != std::errc{}) fail("step bound out of range");
        pos_ = end;
        return n;
    }

    /// Bounded variants carry "<=n" right after the operator keyword.
    bool accept_step_bound(std::size_t& n) {
        skip_ws();
        if (src_.substr(pos_, 2) == "<=") {
            pos_ += 2;
            n = parse_steps();
            return true;
        }
        return false;
    }

    StatePtr parse_path(ProbBound j) {
        std::size_t n = 0;
        if (accept_keyword("X")) return make_prob(j, make_next(parse_state()));
        if (accept_keyword("F")) {
            bool bounded = accept_step_bound(n);
            auto target = parse_state();
            return make_prob(j, bounded ? make_bounded_until(make_true(), target, n) : make_until(make_true(), target));
        }
        if (accept_keyword("G")) {
            // G phi == !F !phi, so P_J(G phi) == P_{1-J}(F !phi).
            bool bounded = accept_step_bound(n);
            auto bad = make_not(parse_state());
            return make_prob(j.complement(),
                             bounded ? make_bounded_until(make_true(), bad, n) : make_until(make_true(), bad));
        }
        auto lhs = parse_state();
        if (!accept_keyword("U")) fail("expected 'U' in path formula");
        bool bounded = accept_step_bound(n);
        auto rhs = parse_state();
        return make_prob(j, bounded ? make_bounded_until(lhs, rhs, n) : make_until(lhs, rhs));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline StatePtr parse(std::string_view text) { return detail::Parser(text).parse_all(); }

}  // namespace deonpol::pctl
