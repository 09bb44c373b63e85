#pragma once

// Straightforward re-implementations of the five distribution metrics, written
// loop by loop from their definitions, used to check the library versions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using Seq = std::vector<int>;
using Corpus = std::vector<Seq>;

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return a.empty() ? 0.0 : std::sqrt(s / static_cast<double>(a.size()));
}

inline std::vector<double> sp(const Corpus& c, int S) {
    const std::size_t L = c[0].size();
    std::vector<double> out(static_cast<std::size_t>(S) * L, 0.0);
    for (int s = 0; s < S; ++s)
        for (std::size_t t = 0; t < L; ++t) {
            int n = 0;
            for (const auto& q : c) n += q[t] == s;
            out[static_cast<std::size_t>(s) * L + t] = static_cast<double>(n) / static_cast<double>(c.size());
        }
    return out;
}

// runs[s] = list of run lengths of state s
inline std::vector<std::vector<int>> runs(const Seq& q, int S) {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(S));
    std::size_t i = 0;
    while (i < q.size()) {
        std::size_t j = i;
        while (j < q.size() && q[j] == q[i]) ++j;
        out[static_cast<std::size_t>(q[i])].push_back(static_cast<int>(j - i));
        i = j;
    }
    return out;
}

inline std::vector<double> sd(const Corpus& c, int S, int cap) {
    std::vector<double> out(static_cast<std::size_t>(S * cap), 0.0);
    for (int s = 0; s < S; ++s) {
        double total = 0.0;
        for (const auto& q : c) {
            const auto r = runs(q, S);
            for (int len : r[static_cast<std::size_t>(s)]) {
                out[static_cast<std::size_t>(s * cap + std::min(len, cap) - 1)] += 1.0;
                total += 1.0;
            }
        }
        if (total > 0)
            for (int b = 0; b < cap; ++b) out[static_cast<std::size_t>(s * cap + b)] /= total;
    }
    return out;
}

inline std::vector<double> na(const Corpus& c, int S) {
    std::vector<double> out(static_cast<std::size_t>(S), 0.0);
    for (const auto& q : c)
        for (int s = 0; s < S; ++s) out[static_cast<std::size_t>(s)] += static_cast<double>(runs(q, S)[static_cast<std::size_t>(s)].size());
    for (auto& v : out) v /= static_cast<double>(c.size());
    return out;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n, my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// Mean per-person curve for one state; empty when every person is constant.
inline std::vector<double> ac(const Corpus& c, int s, int K) {
    std::vector<double> mean(static_cast<std::size_t>(K), 0.0);
    int used = 0;
    for (const auto& q : c) {
        std::vector<double> x;
        for (int v : q) x.push_back(v == s ? 1.0 : 0.0);
        if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
        ++used;
        for (int k = 1; k <= K; ++k) {
            const std::vector<double> a(x.begin(), x.end() - k), b(x.begin() + k, x.end());
            mean[static_cast<std::size_t>(k - 1)] += pearson(a, b);
        }
    }
    if (used == 0) return {};
    for (auto& v : mean) v /= used;
    return mean;
}

inline double ac_rmse(const Corpus& g, const Corpus& r, int S, int K) {
    std::vector<double> all_g, all_r;
    for (int s = 0; s < S; ++s) {
        auto a = ac(g, s, K), b = ac(r, s, K);
        if (a.empty() && b.empty()) continue;
        if (a.empty()) a.assign(static_cast<std::size_t>(K), 0.0);
        if (b.empty()) b.assign(static_cast<std::size_t>(K), 0.0);
        all_g.insert(all_g.end(), a.begin(), a.end());
        all_r.insert(all_r.end(), b.begin(), b.end());
    }
    return rmse(all_g, all_r);
}

// Pairwise distances between the five working days of each week.
inline std::vector<std::uint64_t> hd(const Corpus& c) {
    std::vector<std::uint64_t> bins(145, 0);
    for (const auto& q : c)
        for (int a = 0; a < 5; ++a)
            for (int b = a + 1; b < 5; ++b) {
                int d = 0;
                for (int t = 0; t < 144; ++t) d += q[static_cast<std::size_t>(a * 144 + t)] != q[static_cast<std::size_t>(b * 144 + t)];
                ++bins[static_cast<std::size_t>(d)];
            }
    return bins;
}

inline double hd_mae(const Corpus& g, const Corpus& r) {
    const auto a = hd(g), b = hd(r);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return s / static_cast<double>(a.size());
}

}  // namespace oracle
