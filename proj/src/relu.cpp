#include "fks/relu.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace fks {

ReluModel::ReluModel(KnotVector k, std::vector<double> c, double left)
    : knots(std::move(k)), scalings(std::move(c)), left_coef(left) {
    if (scalings.size() + 1 != knots.size())
        throw std::invalid_argument("ReluModel: scalings length must be N-1");
}

std::vector<Breakpoint> breakpoints_of(const RawShallowNet& raw) {
    if (raw.b.size() != raw.a.size()) throw std::invalid_argument("RawShallowNet: a/b length mismatch");
    std::vector<Breakpoint> out;
    for (std::size_t j = 0; j < raw.a.size(); ++j) {
        if (raw.a[j] == 0.0) continue;
        const double k = -raw.b[j] / raw.a[j];
        out.push_back({k, k >= 0.0 && k <= 1.0, j});
    }
    return out;
}

double raw_eval(const RawShallowNet& raw, double x) {
    double y = raw.bias_out;
    for (std::size_t j = 0; j < raw.a.size(); ++j) y += raw.c_out[j] * std::max(raw.a[j] * x + raw.b[j], 0.0);
    return y;
}

double relu_eval(const ReluModel& m, double x) {
    // Scalings grow like 1/h and cancel; a compensated sum keeps the result near the stored-coefficient bound.
    const double k1 = m.knots[1];
    double y = m.left_coef * std::max(k1 - x, 0.0) / k1;
    double comp = 0.0;
    for (std::size_t i = 0; i < m.scalings.size(); ++i) {
        const double k = m.knots[i];
        const double d = x - k;
        if (d <= 0.0) break;
        // TwoDiff: x - k = d + d_err exactly.
        const double z = d - x;
        const double d_err = (x - (d - z)) - (k + z);
        const double p = m.scalings[i] * d;
        const double p_err = std::fma(m.scalings[i], d, -p) + m.scalings[i] * d_err;
        const double t = y + p;
        comp += (std::abs(y) >= std::abs(p) ? (y - t) + p : (p - t) + y) + p_err;
        y = t;
    }
    return y + comp;
}

void relu_eval_sorted(const ReluModel& m, std::span<const double> xs, std::span<double> out) {
    if (xs.size() != out.size()) throw std::invalid_argument("relu_eval_sorted size mismatch");
    // Running sums of c_i and c_i k_i over active units: sum c_i (x - k_i).
    const auto k = m.knots.values();
    const double k1 = k[1];
    const std::size_t units = m.scalings.size();
    std::size_t next = 0;
    double sum_c = 0.0;
    double sum_ck = 0.0;
    for (std::size_t p = 0; p < xs.size(); ++p) {
        const double x = xs[p];
        while (next < units && x > k[next]) {
            sum_c += m.scalings[next];
            sum_ck += m.scalings[next] * k[next];
            ++next;
        }
        const double left = x < k1 ? m.left_coef * (k1 - x) / k1 : 0.0;
        out[p] = left + sum_c * x - sum_ck;
    }
}

TridiagMatrix weight_to_scaling_matrix(const KnotVector& kv) {
    const std::size_t n = kv.size();
    if (n < 3) throw std::invalid_argument("T needs at least 3 knots");
    const std::size_t m = n - 2;
    TridiagMatrix t(m);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t i = r + 1;
        const double alpha = 1.0 / (kv[i] - kv[i - 1]);
        const double gamma = 1.0 / (kv[i + 1] - kv[i]);
        t.diag[r] = -(alpha + gamma);
        if (r + 1 < m) t.upper[r] = gamma;
        if (r > 0) t.lower[r - 1] = alpha;
    }
    return t;
}

ReluModel fks_to_relu(const FksModel& m) {
    const auto& kv = m.knots;
    const auto& w = m.weights;
    const std::size_t n = kv.size();
    // The three terms are O(w/h) and cancel; extended precision keeps c_i near correctly rounded.
    std::vector<double> c(n - 1);
    c[0] = w[1] / (kv[1] - kv[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const long double alpha = 1.0L / (static_cast<long double>(kv[i]) - kv[i - 1]);
        const long double gamma = 1.0L / (static_cast<long double>(kv[i + 1]) - kv[i]);
        const long double ci = gamma * (static_cast<long double>(w[i + 1]) - w[i]) -
                               (i >= 2 ? alpha * (static_cast<long double>(w[i]) - w[i - 1]) : alpha * w[i]);
        c[i] = static_cast<double>(ci);
    }
    return ReluModel(kv, std::move(c), w[0]);
}

namespace {

// Weights w_1..w_{N-1} from scalings; w_0 is carried separately. T is factored once per model.
class ScalingInverter {
public:
    explicit ScalingInverter(const KnotVector& kv) : kv_(kv) {
        const std::size_t n = kv.size();
        if (n == 2) return;
        factor_.emplace(weight_to_scaling_matrix(kv));
        // T w* = c_{1..N-2} - gamma_{N-2} w_{N-1} e_{N-2} is affine in w_{N-1}:
        // w* = a - w_{N-1} b with T a = c', T b = gamma e.
        b_.assign(n - 2, 0.0);
        b_.back() = 1.0 / (kv[n - 1] - kv[n - 2]);
        factor_->solve_in_place(b_);
        if (b_[0] == 0.0 || !std::isfinite(b_[0])) throw SingularMatrixError("cannot fix w_{N-1}: T^{-1} e vanishes");
    }

    // w must have length N; w[0] is left untouched.
    void solve(std::span<const double> c, std::span<double> w) const {
        const std::size_t n = kv_.size();
        const double w1 = c[0] * kv_[1];
        if (n == 2) {
            w[1] = w1;
            return;
        }
        std::copy(c.begin() + 1, c.end(), w.begin() + 1);
        factor_->solve_in_place(w.subspan(1, n - 2));
        const double w_last = (w[1] - w1) / b_[0];
        for (std::size_t r = 0; r + 2 < n; ++r) w[r + 1] -= w_last * b_[r];
        w[n - 1] = w_last;
    }

private:
    const KnotVector& kv_;
    std::optional<ThomasFactor> factor_;
    std::vector<double> b_;
};

}  // namespace

FksModel relu_to_fks(const ReluModel& m) {
    const auto& kv = m.knots;
    const std::size_t n = kv.size();
    const ScalingInverter inv(kv);
    std::vector<double> w(n);
    w[0] = m.left_coef;
    inv.solve(m.scalings, w);
    // Refinement with the residual of the forward map taken in extended precision.
    std::vector<double> resid(n - 1);
    std::vector<double> dw(n);
    for (int step = 0; step < 2; ++step) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const long double alpha = i >= 1 ? 1.0L / (static_cast<long double>(kv[i]) - kv[i - 1]) : 0.0L;
            const long double gamma = 1.0L / (static_cast<long double>(kv[i + 1]) - kv[i]);
            const long double fwd = i == 0 ? gamma * w[1]
                                           : gamma * w[i + 1] - (alpha + gamma) * w[i] + (i >= 2 ? alpha * w[i - 1] : 0.0L);
            resid[i] = static_cast<double>(m.scalings[i] - fwd);
        }
        inv.solve(resid, dw);
        for (std::size_t i = 1; i < n; ++i) w[i] += dw[i];
    }
    return FksModel(kv, std::move(w));
}

ReluModel relu_from_raw(const RawShallowNet& raw, double gap_floor) {
    if (raw.c_out.size() != raw.a.size()) throw std::invalid_argument("RawShallowNet: c_out length mismatch");
    std::vector<double> k{0.0};
    for (const auto& bp : breakpoints_of(raw))
        if (bp.k > 0.0 && bp.k < 1.0) k.push_back(bp.k);
    k.push_back(1.0);
    std::sort(k.begin() + 1, k.end() - 1);
    project_knots(k, gap_floor);
    KnotVector kv(std::move(k), gap_floor);
    std::vector<double> w(kv.size());
    for (std::size_t i = 0; i < kv.size(); ++i) w[i] = raw_eval(raw, kv[i]);
    return fks_to_relu(FksModel(std::move(kv), std::move(w)));
}

RawShallowNet random_shallow_net(std::size_t width, std::mt19937_64& rng, bool constrain_breakpoints) {
    if (width == 0) throw std::invalid_argument("network width must be positive");
    std::uniform_real_distribution<double> hidden(-1.0, 1.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    std::uniform_real_distribution<double> output(-bound, bound);
    RawShallowNet net;
    net.a.resize(width);
    net.b.resize(width);
    net.c_out.resize(width);
    for (std::size_t j = 0; j < width; ++j) {
        for (;;) {
            net.a[j] = hidden(rng);
            net.b[j] = hidden(rng);
            if (!constrain_breakpoints) break;
            if (net.a[j] == 0.0) continue;
            const double k = -net.b[j] / net.a[j];
            if (k > 0.0 && k < 1.0) break;
        }
    }
    for (std::size_t j = 0; j < width; ++j) net.c_out[j] = output(rng);
    net.bias_out = output(rng);
    return net;
}

}  // namespace fks
