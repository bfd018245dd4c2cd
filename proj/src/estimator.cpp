#include "cptrl/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/sort/spreadsort/float_sort.hpp>

#include "cptrl/errors.hpp"

namespace cptrl {

namespace {

// Kahan-Babuska (Neumaier) compensated accumulator.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            c_ += (sum_ - t) + x;
        } else {
            c_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + c_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

double weight_at(std::size_t k, std::size_t n, const WeightSpec& w) {
    return eval_weight(static_cast<double>(k) / static_cast<double>(n), w);
}

}  // namespace

CptEstimate estimate_cpt(std::span<const double> samples, const CptModel& model, const EstimatorConfig& cfg) {
    validate(model);
    const std::size_t n = samples.size();
    if (n < 2) {
        throw InsufficientSamplesError("CPT estimation needs at least 2 samples, got " + std::to_string(n));
    }
    for (double x : samples) {
        if (!std::isfinite(x)) {
            throw DomainError("CPT estimation requires finite samples");
        }
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    boost::sort::spreadsort::float_sort(sorted.begin(), sorted.end());

    const UtilitySpec& u = model.utility;
    // Ranks (1-based) below `lo` are losses, ranks from `hi` on are gains;
    // samples equal to the reference contribute nothing.
    const auto lo = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), u.reference) - sorted.begin());
    const auto hi = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), u.reference) - sorted.begin());
    // Gain rank i gets w+((n-i+s)/n) - w+((n-i-1+s)/n) with s = 0 for the
    // order-statistics scheme and s = 1 for the empirical CPT; the loss side
    // mirrors it. Each w(k/n) is evaluated once and carried to the next rank.
    const std::size_t shift = cfg.include_top_order_stat ? 1 : 0;
    const std::size_t last = cfg.include_top_order_stat ? n : n - 1;
    CompensatedSum gain;
    CompensatedSum loss;
    if (hi + 1 <= last) {
        double w_hi = weight_at(n + shift - hi - 1, n, model.weight_plus);
        for (std::size_t i = hi + 1; i <= last; ++i) {
            const double w_lo = weight_at(n + shift - i - 1, n, model.weight_plus);
            gain.add(utility_gain(sorted[i - 1], u) * (w_hi - w_lo));
            w_hi = w_lo;
        }
    }
    const std::size_t loss_end = std::min(lo, last);
    double w_prev = 0.0;
    for (std::size_t i = 1; i <= loss_end; ++i) {
        const double w_next = weight_at(i, n, model.weight_minus);
        loss.add(utility_loss(sorted[i - 1], u) * (w_next - w_prev));
        w_prev = w_next;
    }

    CptEstimate est;
    est.n = n;
    est.positive_part = gain.value();
    est.negative_part = loss.value();
    est.value = est.positive_part - est.negative_part;
    return est;
}

// ---------------------------------------------------------------------------
// Discrete support
// ---------------------------------------------------------------------------

DiscreteSupport::DiscreteSupport(std::vector<double> points, double reference)
    : points_(std::move(points)), reference_(reference) {
    if (points_.empty()) {
        throw InvalidSpecError("discrete support must be nonempty");
    }
    if (!std::isfinite(reference_)) {
        throw InvalidSpecError("reference must be finite");
    }
    for (double x : points_) {
        if (!std::isfinite(x)) {
            throw InvalidSpecError("support points must be finite");
        }
    }
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
    split_ = static_cast<std::size_t>(
        std::lower_bound(points_.begin(), points_.end(), reference_) - points_.begin());
}

std::size_t DiscreteSupport::index_of(double x) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), x);
    if (it == points_.end() || *it != x) {
        throw DomainError("value " + std::to_string(x) + " is not a support point");
    }
    return static_cast<std::size_t>(it - points_.begin());
}

DiscreteDist::DiscreteDist(std::vector<double> points, std::vector<double> probs, double reference)
    : support_(points, reference) {
    if (points.size() != probs.size()) {
        throw InvalidSpecError("support and probability vectors differ in length");
    }
    probs_.assign(support_.size(), 0.0);
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (!(probs[k] >= 0.0) || !std::isfinite(probs[k])) {
            throw InvalidSpecError("probabilities must be finite and nonnegative");
        }
        probs_[support_.index_of(points[k])] += probs[k];
    }
    const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) {
        throw InvalidSpecError("probabilities must sum to 1");
    }
    cdf_.resize(probs_.size());
    std::partial_sum(probs_.begin(), probs_.end(), cdf_.begin());
}

double DiscreteDist::sample(RngStream& rng) const {
    const double v = rng.uniform01() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), v);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    return support_.points()[k];
}

std::vector<std::uint64_t> tally(std::span<const double> samples, const DiscreteSupport& support) {
    std::vector<std::uint64_t> counts(support.size(), 0);
    for (double x : samples) {
        ++counts[support.index_of(x)];
    }
    return counts;
}

namespace {

// Shared by the plug-in estimator and the exact value. `below(k)` is the
// mass of atoms 0..k and `above(k)` the mass of atoms k..K-1, either true or
// empirical.
template <class Below, class Above>
CptEstimate discrete_cpt(const DiscreteSupport& support, const CptModel& model, Below below, Above above) {
    validate(model);
    if (support.reference() != model.utility.reference) {
        throw DomainError("support split does not match the model's reference point");
    }
    const auto& x = support.points();
    const std::size_t K = x.size();
    const std::size_t l = support.split();
    const UtilitySpec& u = model.utility;

    CompensatedSum loss;
    double w_prev = 0.0;
    for (std::size_t k = 0; k < l; ++k) {
        const double w_cur = eval_weight(std::min(below(k), 1.0), model.weight_minus);
        loss.add(utility_loss(x[k], u) * (w_cur - w_prev));
        w_prev = w_cur;
    }

    CompensatedSum gain;
    w_prev = 0.0;
    for (std::size_t k = K; k-- > l;) {
        const double w_cur = eval_weight(std::min(above(k), 1.0), model.weight_plus);
        gain.add(utility_gain(x[k], u) * (w_cur - w_prev));
        w_prev = w_cur;
    }

    CptEstimate est;
    est.positive_part = gain.value();
    est.negative_part = loss.value();
    est.value = est.positive_part - est.negative_part;
    return est;
}

}  // namespace

CptEstimate estimate_cpt_discrete(std::span<const std::uint64_t> counts, const DiscreteSupport& support,
                                  const CptModel& model) {
    if (counts.size() != support.size()) {
        throw DomainError("counts reference atoms outside the support");
    }
    const std::uint64_t n = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    if (n == 0) {
        throw InsufficientSamplesError("discrete CPT estimation needs at least one observation");
    }
    // Cumulative counts are integer sums, so each F-hat is one rounding away
    // from exact.
    std::vector<std::uint64_t> from_below(counts.size());
    std::vector<std::uint64_t> from_above(counts.size());
    std::partial_sum(counts.begin(), counts.end(), from_below.begin());
    std::partial_sum(counts.rbegin(), counts.rend(), from_above.rbegin());
    const double nd = static_cast<double>(n);
    CptEstimate est = discrete_cpt(
        support, model, [&](std::size_t k) { return static_cast<double>(from_below[k]) / nd; },
        [&](std::size_t k) { return static_cast<double>(from_above[k]) / nd; });
    est.n = static_cast<std::size_t>(n);
    return est;
}

double exact_cpt_discrete(const DiscreteDist& dist, const CptModel& model) {
    const auto& p = dist.probs();
    std::vector<double> from_below(p.size());
    std::vector<double> from_above(p.size());
    std::partial_sum(p.begin(), p.end(), from_below.begin());
    std::partial_sum(p.rbegin(), p.rend(), from_above.rbegin());
    return discrete_cpt(
               dist.support(), model, [&](std::size_t k) { return from_below[k]; },
               [&](std::size_t k) { return from_above[k]; })
        .value;
}

// ---------------------------------------------------------------------------
// Sample-size calculators
// ---------------------------------------------------------------------------

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " must be positive and finite");
    }
}

// Ceiling that ignores representation error of a few ulps, so thresholds that
// are integers in exact arithmetic (e.g. ln(e) * 4 = 4) do not round up.
std::uint64_t integer_ceiling(double x) {
    if (!(x < 9.2e18)) {
        throw DomainError("required sample size overflows 64 bits");
    }
    const double r = std::round(x);
    if (std::abs(x - r) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
        return static_cast<std::uint64_t>(std::max(r, 0.0));
    }
    return static_cast<std::uint64_t>(std::max(std::ceil(x), 0.0));
}

}  // namespace

double required_samples_holder_real(double eps, double delta, double holder_constant, double utility_bound,
                                    double alpha) {
    require_positive(eps, "eps");
    require_positive(holder_constant, "Hoelder constant");
    require_positive(utility_bound, "utility bound");
    if (!(delta > 0.0 && delta < 1.0)) {
        throw DomainError("delta must lie in (0, 1)");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw DomainError("Hoelder order must lie in (0, 1]");
    }
    const double hm = holder_constant * utility_bound;
    return -std::log(delta) * 4.0 * hm * hm / std::pow(eps, 2.0 / alpha);
}

std::uint64_t required_samples_holder(double eps, double delta, double holder_constant, double utility_bound,
                                      double alpha) {
    return integer_ceiling(required_samples_holder_real(eps, delta, holder_constant, utility_bound, alpha));
}

double required_samples_lipschitz_real(double eps, double delta, double lipschitz_constant, double utility_bound) {
    return required_samples_holder_real(eps, delta, lipschitz_constant, utility_bound, 1.0);
}

std::uint64_t required_samples_lipschitz(double eps, double delta, double lipschitz_constant,
                                         double utility_bound) {
    return required_samples_holder(eps, delta, lipschitz_constant, utility_bound, 1.0);
}

}  // namespace cptrl
