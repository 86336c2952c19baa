#pragma once

// Independent brute-force references used by the unit and acceptance tests.
// Everything here is written directly from the textbook definitions with
// plain loops and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "selfhar/tensor.hpp"

namespace oracle {

using selfhar::Tensor;

// y[t][f] = b[f] + sum_k sum_c x[t+k][c] * K[f][k][c]
inline Tensor conv1d(const Tensor& x, const Tensor& k, const Tensor& b) {
  const std::size_t T = x.dim(0), C = x.dim(1), F = k.dim(0), W = k.dim(1);
  Tensor y({T - W + 1, F});
  for (std::size_t t = 0; t + W <= T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      double s = b[f];
      for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t c = 0; c < C; ++c) s += x.at(t + w, c) * k.at(f, w, c);
      }
      y.at(t, f) = s;
    }
  }
  return y;
}

// Gradients of sum(y * g) for the convolution above.
struct ConvGrads {
  Tensor dk, db, dx;
};
inline ConvGrads conv1d_grads(const Tensor& x, const Tensor& k, const Tensor& g) {
  const std::size_t T = x.dim(0), C = x.dim(1), F = k.dim(0), W = k.dim(1);
  ConvGrads r{Tensor(k.shape()), Tensor({F}), Tensor(x.shape())};
  for (std::size_t t = 0; t + W <= T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      r.db[f] += g.at(t, f);
      for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t c = 0; c < C; ++c) {
          r.dk.at(f, w, c) += g.at(t, f) * x.at(t + w, c);
          r.dx.at(t + w, c) += g.at(t, f) * k.at(f, w, c);
        }
      }
    }
  }
  return r;
}

inline Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y({w.dim(0)});
  for (std::size_t o = 0; o < w.dim(0); ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < w.dim(1); ++i) s += w.at(o, i) * x[i];
    y[o] = s;
  }
  return y;
}

// Max over time per channel, with the first index of the maximum.
inline std::pair<Tensor, std::vector<std::size_t>> max_pool(const Tensor& x) {
  Tensor y({x.dim(1)});
  std::vector<std::size_t> arg(x.dim(1), 0);
  for (std::size_t c = 0; c < x.dim(1); ++c) {
    y[c] = x.at(0, c);
    for (std::size_t t = 1; t < x.dim(0); ++t) {
      if (x.at(t, c) > y[c]) {
        y[c] = x.at(t, c);
        arg[c] = t;
      }
    }
  }
  return {y, arg};
}

// ---- metrics --------------------------------------------------------------

inline std::vector<std::vector<double>> confusion(const std::vector<std::size_t>& truth,
                                                  const std::vector<std::size_t>& pred,
                                                  std::size_t k) {
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) m[truth[i]][pred[i]] += 1.0;
  return m;
}

// Per-class F1 by counting pairs directly.
inline double f1_of_class(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
                          std::size_t a) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (pred[i] == a && truth[i] == a) tp += 1;
    if (pred[i] == a && truth[i] != a) fp += 1;
    if (pred[i] != a && truth[i] == a) fn += 1;
  }
  const double denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2 * tp / denom;
}

inline double weighted_f1(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
                          std::size_t k) {
  double s = 0;
  for (std::size_t a = 0; a < k; ++a) {
    const double support = static_cast<double>(std::count(truth.begin(), truth.end(), a));
    s += support * f1_of_class(truth, pred, a);
  }
  return s / static_cast<double>(truth.size());
}

inline double macro_f1(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
                       std::size_t k) {
  double s = 0;
  std::size_t present = 0;
  for (std::size_t a = 0; a < k; ++a) {
    if (std::count(truth.begin(), truth.end(), a) == 0) continue;
    s += f1_of_class(truth, pred, a);
    ++present;
  }
  return present == 0 ? 0.0 : s / static_cast<double>(present);
}

inline double kappa(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
                    std::size_t k) {
  const double n = static_cast<double>(truth.size());
  double agree = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) agree += truth[i] == pred[i] ? 1 : 0;
  const double po = agree / n;
  double pe = 0;
  for (std::size_t a = 0; a < k; ++a) {
    const double rt = static_cast<double>(std::count(truth.begin(), truth.end(), a)) / n;
    const double rp = static_cast<double>(std::count(pred.begin(), pred.end(), a)) / n;
    pe += rt * rp;
  }
  if (pe == 1.0) return 0.0;
  return (po - pe) / (1.0 - pe);
}

// Linear-interpolation percentile of an unsorted sample, q in [0, 1].
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---- window statistics ----------------------------------------------------

inline std::vector<double> column(const Tensor& w, std::size_t c) {
  std::vector<double> x(w.dim(0));
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = w.at(t, c);
  return x;
}

inline double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

// Sum of |DFT|^2 over the non-zero frequency bins divided by the length,
// by an O(n^2) direct transform.
inline double spectral_energy(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> twiddle(n);
  for (std::size_t m = 0; m < n; ++m) {
    twiddle[m] = std::polar(1.0, -2.0 * M_PI * static_cast<double>(m) / static_cast<double>(n));
  }
  double s = 0;
  for (std::size_t k = 1; k < n; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t t = 0; t < n; ++t) acc += x[t] * twiddle[k * t % n];
    s += std::norm(acc);
  }
  return s / static_cast<double>(n);
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Rank-based terciles: tercile of each element, lowest (value, index) first,
// the first n % 3 terciles one element larger.
inline std::vector<int> terciles(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v[a] < v[b] || (v[a] == v[b] && a < b);
  });
  std::vector<int> out(n);
  std::size_t size0 = n / 3 + (n % 3 > 0 ? 1 : 0), size1 = n / 3 + (n % 3 > 1 ? 1 : 0);
  for (std::size_t r = 0; r < n; ++r) out[order[r]] = r < size0 ? 0 : (r < size0 + size1 ? 1 : 2);
  return out;
}

// Selection by rescanning: argmax class per window (lowest index on ties),
// keep scores >= threshold, then per class the `cap` best by score with the
// window index as tiebreak. Returns (class, index) pairs, class-major.
inline std::vector<std::pair<std::size_t, std::size_t>> select(const std::vector<Tensor>& probs,
                                                               std::size_t classes, double threshold,
                                                               std::size_t cap) {
  std::vector<std::vector<std::pair<double, std::size_t>>> per(classes);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t a = 0; a < classes; ++a) {
      if (probs[i][a] > probs[i][best]) best = a;
    }
    if (probs[i][best] >= threshold) per[best].push_back({-probs[i][best], i});
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < classes; ++a) {
    std::sort(per[a].begin(), per[a].end());
    for (std::size_t k = 0; k < std::min(per[a].size(), cap); ++k) out.push_back({a, per[a][k].second});
  }
  return out;
}

}  // namespace oracle
