#pragma once

// Exact truncated series in q_1..q_n (rational exponents on a fixed lattice 1/D)
// and a Laurent variable z, with arbitrary-precision rational coefficients.
//
// Truncation is by weight, the sum of all q-exponents; q = q_1...q_n has
// weight n. A series stores its order as an exact weight bound: every term
// of weight <= order is known exactly, nothing above it is stored.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "thetaglue/error.hpp"

namespace thetaglue {

using rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend, boost::multiprecision::et_off>;
using bigint = boost::multiprecision::cpp_int;

/// Shape of the exponent lattice shared by every value of one ring.
struct RingMeta {
    int vars = 2;             // n, number of q-variables
    std::int64_t denom = 4;   // D, exponent denominator
    std::int64_t floor = -8;  // F, lowest admissible q-exponent

    friend bool operator==(const RingMeta&, const RingMeta&) = default;

    [[nodiscard]] std::int64_t floor_num() const { return floor * denom; }

    /// Default ring for an n-component cycle: D = 4n^2.
    static RingMeta for_cycle(int n) { return {n, 4LL * n * n, -8}; }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os << "(n=" << vars << ", D=" << denom << ", F=" << floor << ")";
        return os.str();
    }
};

/// Exponents of q_1..q_n (as numerators over D) and of z.
struct ExponentKey {
    std::vector<std::int64_t> q;
    std::int64_t z = 0;

    friend auto operator<=>(const ExponentKey&, const ExponentKey&) = default;
    friend bool operator==(const ExponentKey&, const ExponentKey&) = default;

    [[nodiscard]] std::int64_t weight_num() const {
        std::int64_t w = 0;
        for (auto e : q) w += e;
        return w;
    }
    [[nodiscard]] std::int64_t min_q() const {
        return q.empty() ? 0 : *std::min_element(q.begin(), q.end());
    }
};

namespace detail {

inline constexpr std::int64_t no_floor = std::numeric_limits<std::int64_t>::min() / 4;

inline ExponentKey add_keys(const ExponentKey& a, const ExponentKey& b) {
    ExponentKey r{a.q, a.z + b.z};
    for (std::size_t i = 0; i < r.q.size(); ++i) r.q[i] += b.q[i];
    return r;
}

inline ExponentKey scale_key(const ExponentKey& a, std::int64_t s) {
    ExponentKey r{a.q, a.z * s};
    for (auto& e : r.q) e *= s;
    return r;
}

inline bool above_floor(const ExponentKey& k, std::int64_t floor_num) { return k.min_q() >= floor_num; }

inline rational rational_pow(const rational& base, std::int64_t e) {
    if (e < 0) return rational_pow(rational(1) / base, -e);
    rational result = 1, b = base;
    while (e > 0) {
        if (e & 1) result *= b;
        b *= b;
        e >>= 1;
    }
    return result;
}

inline std::string rational_text(const rational& r) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(r);
    if (boost::multiprecision::denominator(r) != 1) os << '/' << boost::multiprecision::denominator(r);
    return os.str();
}

/// r * denom as an exact integer, or nullopt when r is off the lattice.
inline std::optional<std::int64_t> lattice_numerator(const rational& r, std::int64_t denom) {
    rational scaled = r * denom;
    if (boost::multiprecision::denominator(scaled) != 1) return std::nullopt;
    return boost::multiprecision::numerator(scaled).convert_to<std::int64_t>();
}

inline std::string key_text(const ExponentKey& key, std::int64_t denom) {
    std::string out;
    auto append = [&](const std::string& s) {
        if (!out.empty()) out += ' ';
        out += s;
    };
    for (std::size_t i = 0; i < key.q.size(); ++i) {
        if (key.q[i] == 0) continue;
        append("q" + std::to_string(i + 1) + "^" + rational_text(rational(key.q[i], denom)));
    }
    if (key.z != 0) append("z^" + std::to_string(key.z));
    return out.empty() ? "1" : out;
}

} // namespace detail

/// A single term c * q^a * z^e.
class Monomial {
public:
    Monomial(RingMeta meta, rational coeff, ExponentKey key)
        : meta_(meta), coeff_(std::move(coeff)), key_(std::move(key)) {
        if (static_cast<int>(key_.q.size()) != meta_.vars)
            throw ring_mismatch("monomial key has " + std::to_string(key_.q.size()) + " q-exponents, ring " +
                                meta_.describe());
        if (coeff_ == 0) throw error("monomial coefficient must be nonzero");
    }

    static Monomial one(const RingMeta& meta) {
        return {meta, 1, ExponentKey{std::vector<std::int64_t>(meta.vars, 0), 0}};
    }
    /// q_k for 1 <= k <= n.
    static Monomial q(const RingMeta& meta, int k, const rational& power = 1) {
        std::vector<rational> e(meta.vars, 0);
        e.at(static_cast<std::size_t>(k - 1)) = power;
        return from_exponents(meta, 1, e, 0);
    }
    /// q = q_1 ... q_n raised to `power`.
    static Monomial q_total(const RingMeta& meta, const rational& power = 1) {
        return from_exponents(meta, 1, std::vector<rational>(meta.vars, power), 0);
    }
    static Monomial z(const RingMeta& meta, std::int64_t power = 1) {
        return {meta, 1, ExponentKey{std::vector<std::int64_t>(meta.vars, 0), power}};
    }
    static Monomial from_exponents(const RingMeta& meta, rational coeff, const std::vector<rational>& qexp,
                                   std::int64_t zexp) {
        if (static_cast<int>(qexp.size()) != meta.vars) throw ring_mismatch("wrong number of q-exponents");
        ExponentKey key{std::vector<std::int64_t>(meta.vars), zexp};
        for (std::size_t i = 0; i < qexp.size(); ++i) {
            auto num = detail::lattice_numerator(qexp[i], meta.denom);
            if (!num)
                throw lattice_violation("exponent " + detail::rational_text(qexp[i]) + " not on lattice 1/" +
                                        std::to_string(meta.denom));
            key.q[i] = *num;
        }
        return {meta, std::move(coeff), std::move(key)};
    }

    [[nodiscard]] const RingMeta& meta() const { return meta_; }
    [[nodiscard]] const rational& coeff() const { return coeff_; }
    [[nodiscard]] const ExponentKey& key() const { return key_; }
    [[nodiscard]] rational q_exponent(int k) const {
        return rational(key_.q.at(static_cast<std::size_t>(k - 1)), meta_.denom);
    }
    [[nodiscard]] std::int64_t z_exponent() const { return key_.z; }
    [[nodiscard]] std::int64_t weight_num() const { return key_.weight_num(); }
    [[nodiscard]] rational weight() const { return rational(weight_num(), meta_.denom); }
    [[nodiscard]] bool is_one() const {
        return coeff_ == 1 && key_.z == 0 && std::all_of(key_.q.begin(), key_.q.end(), [](auto e) { return e == 0; });
    }

    [[nodiscard]] Monomial inverse() const { return {meta_, rational(1) / coeff_, detail::scale_key(key_, -1)}; }
    [[nodiscard]] Monomial pow(std::int64_t e) const {
        return {meta_, detail::rational_pow(coeff_, e), detail::scale_key(key_, e)};
    }
    /// Exact square root; only monomials with coefficient 1 and even lattice numerators (in 1/(2D)) qualify.
    [[nodiscard]] Monomial sqrt() const {
        if (coeff_ != 1) throw lattice_violation("square root of a monomial with coefficient " + detail::rational_text(coeff_));
        if (key_.z % 2 != 0) throw lattice_violation("square root of an odd power of z");
        ExponentKey k{key_.q, key_.z / 2};
        for (auto& e : k.q) {
            if (e % 2 != 0) throw lattice_violation("square root leaves the exponent lattice");
            e /= 2;
        }
        return {meta_, 1, std::move(k)};
    }
    [[nodiscard]] Monomial without_z() const { return {meta_, coeff_, ExponentKey{key_.q, 0}}; }

    friend Monomial operator*(const Monomial& a, const Monomial& b) {
        if (a.meta_ != b.meta_) throw ring_mismatch("monomials from different rings");
        return {a.meta_, a.coeff_ * b.coeff_, detail::add_keys(a.key_, b.key_)};
    }
    friend Monomial operator/(const Monomial& a, const Monomial& b) { return a * b.inverse(); }
    friend bool operator==(const Monomial& a, const Monomial& b) {
        return a.meta_ == b.meta_ && a.coeff_ == b.coeff_ && a.key_ == b.key_;
    }

    /// e.g. "q1^-1/4 q2^1/4 z^1"; a coefficient other than 1 is printed first.
    [[nodiscard]] std::string to_string() const {
        std::string body = detail::key_text(key_, meta_.denom);
        if (coeff_ == 1) return body;
        std::string c = detail::rational_text(coeff_);
        return body == "1" ? c : c + " " + body;
    }

private:
    RingMeta meta_;
    rational coeff_;
    ExponentKey key_;
};

class TruncatedSeries;

/// Where two exact or numeric objects first disagree.
struct Discrepancy {
    std::string location;
    std::string lhs;
    std::string rhs;
    std::optional<ExponentKey> key;
};

struct CheckResult {
    bool passed = true;
    std::optional<Discrepancy> first_discrepancy;
    std::string detail;

    static CheckResult ok(std::string detail = {}) { return {true, std::nullopt, std::move(detail)}; }
    static CheckResult fail(Discrepancy d, std::string detail = {}) { return {false, std::move(d), std::move(detail)}; }
};

class TruncatedSeries {
public:
    using term_map = std::map<ExponentKey, rational>;

    TruncatedSeries(RingMeta meta, const rational& order) : meta_(meta) {
        auto num = detail::lattice_numerator(order, meta_.denom);
        if (!num) throw lattice_violation("series order off the lattice");
        order_num_ = *num;
    }
    TruncatedSeries(RingMeta meta, std::int64_t order_num, term_map terms)
        : meta_(meta), order_num_(order_num), terms_(std::move(terms)) {
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (it->second == 0 || !admits(it->first)) it = terms_.erase(it);
            else ++it;
        }
    }

    static TruncatedSeries zero(const RingMeta& meta, const rational& order) { return {meta, order}; }
    static TruncatedSeries one(const RingMeta& meta, const rational& order) {
        return from_monomial(Monomial::one(meta), order);
    }
    static TruncatedSeries from_monomial(const Monomial& m, const rational& order) {
        TruncatedSeries s(m.meta(), order);
        s.add_term(m.key(), m.coeff());
        return s;
    }
    static TruncatedSeries from_monomials(const RingMeta& meta, const rational& order, std::span<const Monomial> ms) {
        TruncatedSeries s(meta, order);
        for (const auto& m : ms) s.add_term(m.key(), m.coeff());
        return s;
    }

    [[nodiscard]] const RingMeta& meta() const { return meta_; }
    [[nodiscard]] rational order() const { return rational(order_num_, meta_.denom); }
    [[nodiscard]] std::int64_t order_num() const { return order_num_; }
    [[nodiscard]] const term_map& terms() const { return terms_; }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] bool empty() const { return terms_.empty(); }
    [[nodiscard]] rational coefficient(const ExponentKey& k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? rational(0) : it->second;
    }
    [[nodiscard]] bool admits(const ExponentKey& k) const {
        return k.weight_num() <= order_num_ && detail::above_floor(k, meta_.floor_num());
    }

    /// Adds c * key, silently dropping it when outside the truncation window.
    void add_term(const ExponentKey& key, const rational& c) {
        if (static_cast<int>(key.q.size()) != meta_.vars) throw ring_mismatch("key size does not match ring");
        if (c == 0 || !admits(key)) return;
        auto [it, inserted] = terms_.try_emplace(key, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    [[nodiscard]] std::vector<Monomial> monomials() const {
        std::vector<Monomial> out;
        out.reserve(terms_.size());
        for (const auto& [k, c] : terms_) out.emplace_back(meta_, c, k);
        return out;
    }

    /// Minimum-weight term, ties broken by the canonical key order.
    [[nodiscard]] std::optional<Monomial> lead() const {
        const term_map::value_type* best = nullptr;
        for (const auto& t : terms_)
            if (!best || t.first.weight_num() < best->first.weight_num()) best = &t;
        if (!best) return std::nullopt;
        return Monomial(meta_, best->second, best->first);
    }
    [[nodiscard]] std::vector<Monomial> lowest_weight_part() const {
        std::vector<Monomial> out;
        auto l = lead();
        if (!l) return out;
        for (const auto& [k, c] : terms_)
            if (k.weight_num() == l->weight_num()) out.emplace_back(meta_, c, k);
        return out;
    }
    [[nodiscard]] std::optional<std::pair<std::int64_t, std::int64_t>> z_range() const {
        if (terms_.empty()) return std::nullopt;
        std::int64_t lo = terms_.begin()->first.z, hi = lo;
        for (const auto& [k, c] : terms_) {
            lo = std::min(lo, k.z);
            hi = std::max(hi, k.z);
        }
        return std::pair{lo, hi};
    }

    [[nodiscard]] TruncatedSeries truncated(const rational& order) const {
        TruncatedSeries out(meta_, order);
        out.order_num_ = std::min(out.order_num_, order_num_);
        for (const auto& [k, c] : terms_)
            if (out.admits(k)) out.terms_.emplace(k, c);
        return out;
    }
    [[nodiscard]] TruncatedSeries truncated_num(std::int64_t order_num) const {
        return truncated(rational(order_num, meta_.denom));
    }

    friend TruncatedSeries operator+(const TruncatedSeries& f, const TruncatedSeries& g) {
        check_same_ring(f, g);
        TruncatedSeries out(f.meta_, std::min(f.order_num_, g.order_num_), {});
        for (const auto& [k, c] : f.terms_) out.add_term(k, c);
        for (const auto& [k, c] : g.terms_) out.add_term(k, c);
        return out;
    }
    friend TruncatedSeries operator-(const TruncatedSeries& f) {
        TruncatedSeries out = f;
        for (auto& [k, c] : out.terms_) c = -c;
        return out;
    }
    friend TruncatedSeries operator-(const TruncatedSeries& f, const TruncatedSeries& g) { return f + (-g); }

    friend TruncatedSeries operator*(const TruncatedSeries& f, const TruncatedSeries& g) {
        check_same_ring(f, g);
        std::int64_t bound = std::min(f.order_num_, g.order_num_);
        return {f.meta_, bound, multiply_terms(f.terms_, g.terms_, bound, f.meta_.floor_num())};
    }
    /// Exact shift by a monomial; the order moves with it.
    friend TruncatedSeries operator*(const TruncatedSeries& f, const Monomial& m) {
        if (f.meta_ != m.meta()) throw ring_mismatch("monomial from a different ring");
        TruncatedSeries out(f.meta_, f.order_num_ + m.weight_num(), {});
        for (const auto& [k, c] : f.terms_) out.add_term(detail::add_keys(k, m.key()), c * m.coeff());
        return out;
    }
    friend TruncatedSeries operator*(const Monomial& m, const TruncatedSeries& f) { return f * m; }

    /// Equality of term associations (the order is not compared).
    friend bool operator==(const TruncatedSeries& f, const TruncatedSeries& g) {
        return f.meta_ == g.meta_ && f.terms_ == g.terms_;
    }

    [[nodiscard]] std::vector<std::string> term_strings() const {
        std::vector<std::string> out;
        for (const auto& [k, c] : terms_) out.push_back(Monomial(meta_, c, k).to_string());
        return out;
    }
    [[nodiscard]] std::string to_string() const {
        if (terms_.empty()) return "0";
        std::string out;
        for (const auto& s : term_strings()) out += (out.empty() ? "" : " + ") + s;
        return out;
    }

    /// Exact product of term maps, keeping weight <= bound and q-exponents >= floor.
    static term_map multiply_terms(const term_map& a, const term_map& b, std::int64_t bound, std::int64_t floor_num) {
        std::vector<std::pair<std::int64_t, const term_map::value_type*>> bw;
        bw.reserve(b.size());
        for (const auto& t : b) bw.emplace_back(t.first.weight_num(), &t);
        std::sort(bw.begin(), bw.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

        term_map out;
        for (const auto& ta : a) {
            const std::int64_t wa = ta.first.weight_num();
            for (const auto& [wb, tb] : bw) {
                if (wa + wb > bound) break;
                ExponentKey k = detail::add_keys(ta.first, tb->first);
                if (!detail::above_floor(k, floor_num)) continue;
                auto [it, inserted] = out.try_emplace(std::move(k), ta.second * tb->second);
                if (!inserted) it->second += ta.second * tb->second;
            }
        }
        std::erase_if(out, [](const auto& t) { return t.second == 0; });
        return out;
    }

private:
    static void check_same_ring(const TruncatedSeries& f, const TruncatedSeries& g) {
        if (f.meta_ != g.meta_) throw ring_mismatch("series from rings " + f.meta_.describe() + " and " + g.meta_.describe());
    }

    RingMeta meta_;
    std::int64_t order_num_ = 0;
    term_map terms_;
};

enum class CombineOp { add, mul };

inline TruncatedSeries series_combine(const TruncatedSeries& f, const TruncatedSeries& g, CombineOp op) {
    return op == CombineOp::add ? f + g : f * g;
}

/// Multiplicative inverse of a series whose minimum-weight part is a single monomial.
inline TruncatedSeries series_invert_unit(const TruncatedSeries& f) {
    auto low = f.lowest_weight_part();
    if (low.size() != 1)
        throw not_invertible(low.empty() ? "zero series is not invertible"
                                         : "lowest-weight part has " + std::to_string(low.size()) + " terms");
    const Monomial lead = low.front();
    const Monomial lead_inv = lead.inverse();
    const std::int64_t w0 = lead.weight_num();
    // The result is lead^-1 * (1+h)^-1; (1+h)^-1 is needed to weight order + w0.
    const std::int64_t work = f.order_num() + std::max<std::int64_t>(w0, 0);

    TruncatedSeries::term_map h;
    for (const auto& [k, c] : f.terms()) {
        if (k == lead.key()) continue;
        h.emplace(detail::add_keys(k, lead_inv.key()), -c * lead_inv.coeff());  // stores -h
    }

    TruncatedSeries::term_map sum{{ExponentKey{std::vector<std::int64_t>(f.meta().vars, 0), 0}, 1}};
    TruncatedSeries::term_map power = sum;
    while (!power.empty()) {
        power = TruncatedSeries::multiply_terms(power, h, work, detail::no_floor);
        for (const auto& [k, c] : power) {
            auto [it, inserted] = sum.try_emplace(k, c);
            if (!inserted) it->second += c;
        }
    }
    TruncatedSeries out(f.meta(), f.order_num(), {});
    for (const auto& [k, c] : sum) out.add_term(detail::add_keys(k, lead_inv.key()), c * lead_inv.coeff());
    return out;
}

/// Ring homomorphism z -> m.
///
/// A stored term of z-degree e moves by e * weight(m); the result's order is
/// lowered by the largest such drop over the stored z-range, so the result is
/// exact provided the unstored tail has no z-degrees outside that range.
inline TruncatedSeries substitute_monomial(const TruncatedSeries& f, const Monomial& m) {
    if (f.meta() != m.meta()) throw ring_mismatch("substitution monomial from a different ring");
    const std::int64_t wm = m.weight_num();
    std::int64_t order = f.order_num();
    if (auto zr = f.z_range()) order += std::min({std::int64_t{0}, zr->first * wm, zr->second * wm});

    TruncatedSeries out(f.meta(), order, {});
    const Monomial mq = m.without_z();
    for (const auto& [k, c] : f.terms()) {
        ExponentKey nk = detail::add_keys(ExponentKey{k.q, 0}, detail::scale_key(mq.key(), k.z));
        nk.z = m.z_exponent() * k.z;
        if (nk.weight_num() > order) continue;
        if (!detail::above_floor(nk, f.meta().floor_num()))
            throw floor_violation("substitution produces " + detail::key_text(nk, f.meta().denom) + " below floor " +
                                  std::to_string(f.meta().floor));
        out.add_term(nk, c * detail::rational_pow(m.coeff(), k.z));
    }
    return out;
}

/// A lazily generated sequence of monomials m_i standing for factors (1 + m_i).
using FactorStream = std::function<std::optional<Monomial>()>;

inline FactorStream stream_of(std::vector<Monomial> factors) {
    return [fs = std::move(factors), i = std::size_t{0}]() mutable -> std::optional<Monomial> {
        if (i >= fs.size()) return std::nullopt;
        return fs[i++];
    };
}

/// first, first*ratio, first*ratio^2, ...
inline FactorStream geometric_stream(Monomial first, Monomial ratio) {
    return [cur = std::optional<Monomial>(std::move(first)), ratio = std::move(ratio)]() mutable -> std::optional<Monomial> {
        Monomial out = *cur;
        cur = out * ratio;
        return out;
    };
}

/// Merges streams that are each non-decreasing in weight; ties go to the earlier stream.
inline FactorStream merge_streams(std::vector<FactorStream> streams) {
    std::vector<std::optional<Monomial>> heads;
    for (auto& s : streams) heads.push_back(s());
    return [streams = std::move(streams), heads = std::move(heads)]() mutable -> std::optional<Monomial> {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < heads.size(); ++i)
            if (heads[i] && (!best || heads[i]->weight_num() < heads[*best]->weight_num())) best = i;
        if (!best) return std::nullopt;
        Monomial out = *heads[*best];
        heads[*best] = streams[*best]();
        return out;
    };
}

inline constexpr std::size_t max_product_factors = 1'000'000;

/// Product of (1 + m_i) over the stream, exact modulo weight > order.
///
/// The stream must be non-decreasing in weight from some point on. It is read
/// until a factor's weight exceeds order plus the total weight deficit of the
/// negative-weight factors seen so far.
inline TruncatedSeries truncated_product(FactorStream stream, const RingMeta& meta, const rational& order) {
    const TruncatedSeries shape(meta, order);
    const std::int64_t order_num = shape.order_num();
    std::int64_t allowance = 0;
    std::vector<Monomial> positive, negative;
    std::size_t consumed = 0;
    while (auto m = stream()) {
        if (++consumed > max_product_factors)
            throw non_terminating("factor stream did not exceed the weight bound within " +
                                  std::to_string(max_product_factors) + " factors");
        if (m->meta() != meta) throw ring_mismatch("factor from a different ring");
        const std::int64_t w = m->weight_num();
        if (w > order_num + allowance) break;
        if (w < 0) {
            allowance -= w;
            negative.push_back(*m);
        } else {
            positive.push_back(*m);
        }
    }

    std::int64_t work = order_num + allowance;
    TruncatedSeries::term_map acc{{ExponentKey{std::vector<std::int64_t>(meta.vars, 0), 0}, 1}};
    auto times_binomial = [&](const Monomial& m) {
        TruncatedSeries::term_map shifted;
        for (const auto& [k, c] : acc) {
            ExponentKey nk = detail::add_keys(k, m.key());
            if (nk.weight_num() <= work) shifted.emplace(std::move(nk), c * m.coeff());
        }
        for (auto& [k, c] : shifted) {
            auto [it, inserted] = acc.try_emplace(k, c);
            if (!inserted) {
                it->second += c;
                if (it->second == 0) acc.erase(it);
            }
        }
    };
    for (const auto& m : positive) times_binomial(m);
    for (const auto& m : negative) {
        times_binomial(m);
        work += m.weight_num();
        std::erase_if(acc, [&](const auto& t) { return t.first.weight_num() > work; });
    }
    return {meta, order_num, std::move(acc)};
}

/// Formal expansion of sum_k q^{m(k+a)^2/2} (z^alpha * shift)^{k+a}, i.e.
/// theta_{a,0}(alpha*zeta + sigma, m*tau) with z = e^{2 pi i zeta} and
/// shift = e^{2 pi i sigma} a coefficient-1 monomial.
inline TruncatedSeries theta_series(const rational& a, std::int64_t alpha, const Monomial& shift, std::int64_t m,
                                    const rational& order) {
    const RingMeta& meta = shift.meta();
    if (m <= 0) throw domain_error("theta modulus multiplier must be positive");
    if (shift.coeff() != 1) throw domain_error("theta shift must have coefficient 1");
    const rational zrate = rational(alpha + shift.z_exponent());
    if (boost::multiprecision::denominator(zrate * a) != 1)
        throw lattice_violation("z-exponent (alpha+shift_z)*a is not an integer");

    TruncatedSeries out(meta, order);
    const rational quad = rational(m, 2);
    std::vector<rational> s(meta.vars);
    rational ws = 0;
    for (int j = 0; j < meta.vars; ++j) {
        s[j] = shift.q_exponent(j + 1);
        ws += s[j];
    }
    auto weight_at = [&](const rational& t) { return meta.vars * quad * t * t + ws * t; };
    auto term_at = [&](std::int64_t k) -> std::optional<ExponentKey> {
        const rational t = rational(k) + a;
        if (weight_at(t) > out.order()) return std::nullopt;
        ExponentKey key{std::vector<std::int64_t>(meta.vars), 0};
        for (int j = 0; j < meta.vars; ++j) {
            auto num = detail::lattice_numerator(quad * t * t + s[j] * t, meta.denom);
            if (!num) throw lattice_violation("theta exponent off the lattice 1/" + std::to_string(meta.denom));
            key.q[j] = *num;
        }
        key.z = boost::multiprecision::numerator(zrate * t).convert_to<std::int64_t>();
        if (!detail::above_floor(key, meta.floor_num()))
            throw floor_violation("theta term " + detail::key_text(key, meta.denom) + " below floor");
        return key;
    };

    // weight is convex in k with its minimum near t* = -ws / (n m)
    const rational centre = -ws / (meta.vars * rational(m)) - a;
    const auto start = static_cast<std::int64_t>(std::ceil(centre.convert_to<double>()));
    for (std::int64_t k = start;; ++k) {
        auto key = term_at(k);
        if (!key) break;
        out.add_term(*key, 1);
    }
    for (std::int64_t k = start - 1;; --k) {
        auto key = term_at(k);
        if (!key) break;
        out.add_term(*key, 1);
    }
    return out;
}

/// sum_{l in Z} q^{l^2} y^l, summed directly from monomial powers.
inline TruncatedSeries jtp_sum(const Monomial& y, const rational& order) {
    const RingMeta& meta = y.meta();
    TruncatedSeries out(meta, order);
    const Monomial q = Monomial::q_total(meta);
    const std::int64_t n = meta.vars, wy = y.weight_num();
    auto weight_num = [&](std::int64_t l) { return n * meta.denom * l * l + wy * l; };
    out.add_term(Monomial::one(meta).key(), 1);
    for (int dir : {1, -1}) {
        for (std::int64_t l = dir;; l += dir) {
            const std::int64_t w = weight_num(l);
            if (w > out.order_num() && w > weight_num(l - dir)) break;
            const Monomial t = q.pow(l * l) * y.pow(l);
            out.add_term(t.key(), t.coeff());
        }
    }
    return out;
}

/// prod_{m>=1} (1 - q^{2m})(1 + q^{2m-1} y)(1 + q^{2m-1} / y).
inline TruncatedSeries jtp_product(const Monomial& y, const rational& order) {
    const RingMeta& meta = y.meta();
    const Monomial q = Monomial::q_total(meta);
    const Monomial q2 = q.pow(2);
    std::vector<FactorStream> families;
    families.push_back(geometric_stream(Monomial(meta, -1, q2.key()), q2));
    families.push_back(geometric_stream(q * y, q2));
    families.push_back(geometric_stream(q * y.inverse(), q2));
    return truncated_product(merge_streams(std::move(families)), meta, order);
}

/// Term-by-term comparison on the common order; reports the first differing key.
inline CheckResult compare_series(const TruncatedSeries& lhs, const TruncatedSeries& rhs) {
    if (lhs.meta() != rhs.meta()) throw ring_mismatch("cannot compare series from different rings");
    const std::int64_t bound = std::min(lhs.order_num(), rhs.order_num());
    const auto l = lhs.truncated_num(bound), r = rhs.truncated_num(bound);
    auto li = l.terms().begin(), ri = r.terms().begin();
    std::optional<ExponentKey> first;
    while (li != l.terms().end() || ri != r.terms().end()) {
        if (ri == r.terms().end() || (li != l.terms().end() && li->first < ri->first)) {
            first = li->first;
            break;
        }
        if (li == l.terms().end() || ri->first < li->first) {
            first = ri->first;
            break;
        }
        if (li->second != ri->second) {
            first = li->first;
            break;
        }
        ++li;
        ++ri;
    }
    const std::string window = "weight <= " + detail::rational_text(rational(bound, lhs.meta().denom));
    if (!first) return CheckResult::ok(std::to_string(l.size()) + " terms agree at " + window);
    return CheckResult::fail({detail::key_text(*first, lhs.meta().denom), detail::rational_text(l.coefficient(*first)),
                              detail::rational_text(r.coefficient(*first)), *first},
                             "series differ at " + window);
}

/// Jacobi triple product identity for the monomial y, checked exactly.
inline CheckResult jtp_check(const Monomial& y, const rational& order) {
    return compare_series(jtp_product(y, order), jtp_sum(y, order));
}

/// The unique monomial u with f = u * g on the window both sides determine.
inline Monomial extract_unit(const TruncatedSeries& f, const TruncatedSeries& g) {
    const RingMeta& meta = f.meta();
    if (meta != g.meta()) throw ring_mismatch("extract_unit across rings");
    auto lead_g = g.lead();
    if (!lead_g) throw not_proportional("divisor series is zero");
    auto lead_f = f.lead();
    if (!lead_f) throw not_proportional("dividend series vanishes to order " + detail::rational_text(f.order()));
    const Monomial u = *lead_f / *lead_g;
    const std::int64_t bound = std::min(f.order_num(), g.order_num() + u.weight_num());
    if (lead_f->weight_num() > bound) throw not_proportional("truncation too low to determine a unit");

    const TruncatedSeries ug = TruncatedSeries(meta, bound, {}) + (g * u).truncated_num(bound);
    const TruncatedSeries fw = f.truncated_num(bound);
    auto by_weight = [](const ExponentKey& a, const ExponentKey& b) {
        return std::pair(a.weight_num(), a) < std::pair(b.weight_num(), b);
    };
    std::vector<ExponentKey> keys;
    for (const auto& [k, c] : fw.terms()) keys.push_back(k);
    for (const auto& [k, c] : ug.terms()) keys.push_back(k);
    std::sort(keys.begin(), keys.end(), by_weight);
    for (const auto& k : keys) {
        if (fw.coefficient(k) != ug.coefficient(k))
            throw not_proportional("not proportional by " + u.to_string() + ": at " + detail::key_text(k, meta.denom) +
                                   " lhs " + detail::rational_text(fw.coefficient(k)) + ", unit*rhs " +
                                   detail::rational_text(ug.coefficient(k)));
    }
    return u;
}

/// u with f(qz) = u f(z).
inline Monomial automorphy_of(const TruncatedSeries& f) {
    const RingMeta& meta = f.meta();
    try {
        return extract_unit(substitute_monomial(f, Monomial::q_total(meta) * Monomial::z(meta)), f);
    } catch (const not_proportional& e) {
        throw not_quasi_periodic(std::string("not quasi-periodic under z -> qz: ") + e.what());
    }
}

/// Each factor m_i of the stream with z -> m applied.
inline FactorStream substituted_stream(FactorStream s, Monomial m) {
    return [s = std::move(s), m = std::move(m)]() mutable -> std::optional<Monomial> {
        auto f = s();
        if (!f) return std::nullopt;
        return f->without_z() * m.pow(f->z_exponent());
    };
}

using FamilyFactory = std::function<std::vector<FactorStream>()>;

/// Automorphy of prod over the merged families under z -> qz. The shifted
/// product is expanded from shifted factors, family by family, so it is exact
/// to the full order whatever the z-degrees of the omitted terms.
inline Monomial product_automorphy(const FamilyFactory& families, const RingMeta& meta, const rational& order) {
    const Monomial shift = Monomial::q_total(meta) * Monomial::z(meta);
    std::vector<FactorStream> moved;
    for (auto& s : families()) moved.push_back(substituted_stream(std::move(s), shift));
    const TruncatedSeries base = truncated_product(merge_streams(families()), meta, order);
    const TruncatedSeries shifted = truncated_product(merge_streams(std::move(moved)), meta, order);
    try {
        return extract_unit(shifted, base);
    } catch (const not_proportional& e) {
        throw not_quasi_periodic(std::string("product not quasi-periodic under z -> qz: ") + e.what());
    }
}

/// prod_{k>=1} (1 - q^{modulus k}), the product part of eta(modulus * tau).
inline TruncatedSeries eta_product(const RingMeta& meta, std::int64_t modulus, const rational& order) {
    const Monomial step = Monomial::q_total(meta, modulus);
    return truncated_product(geometric_stream(Monomial(meta, -1, step.key()), step), meta, order);
}

/// d/dz, term-wise.
inline TruncatedSeries derivative_z(const TruncatedSeries& f) {
    TruncatedSeries out(f.meta(), f.order_num(), {});
    for (const auto& [k, c] : f.terms()) {
        if (k.z == 0) continue;
        ExponentKey nk = k;
        nk.z -= 1;
        out.add_term(nk, c * k.z);
    }
    return out;
}

/// Re-expresses a series on another lattice with the same number of variables.
inline TruncatedSeries convert_ring(const TruncatedSeries& f, const RingMeta& target) {
    if (f.meta().vars != target.vars) throw ring_mismatch("variable count differs");
    auto convert = [&](std::int64_t num) {
        auto out = detail::lattice_numerator(rational(num, f.meta().denom), target.denom);
        if (!out) throw lattice_violation("exponent not representable on target lattice");
        return *out;
    };
    TruncatedSeries out(target, convert(f.order_num()), {});
    for (const auto& [k, c] : f.terms()) {
        ExponentKey nk{k.q, k.z};
        for (auto& e : nk.q) e = convert(e);
        out.add_term(nk, c);
    }
    return out;
}

} // namespace thetaglue
