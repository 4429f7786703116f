// Copyright 2026-present the livemod project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "livemod/losses.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_util.h"

using namespace livemod;
using Catch::Approx;

namespace {

std::vector<double>
random_simplex(std::mt19937_64& rng, size_t c) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> p(c);
    double total = 0.0;
    for (auto& x : p) {
        x = expo(rng) + 1e-3;
        total += x;
    }
    for (auto& x : p) {
        x /= total;
    }
    return p;
}

// Straight from the displayed formula: outer sums over the pair sets, inner
// sums over pairs sharing the anchor, no grouping.
double
ms_oracle(const SimilarityMatrix& s, const MsParams& prm) {
    std::vector<std::pair<size_t, size_t>> pos, neg;
    for (size_t i = 0; i < s.rows(); ++i) {
        for (size_t j = 0; j < s.cols(); ++j) {
            if (s.positive(i, j)) {
                pos.emplace_back(i, j);
            }
            if (s.negative(i, j)) {
                neg.emplace_back(i, j);
            }
        }
    }
    double first = 0.0;
    for (auto [i, j] : pos) {
        double inner = 0.0;
        for (auto [a, k] : neg) {
            if (a == i) {
                inner += std::exp(prm.alpha * (s.s(a, k) - prm.lambda));
            }
        }
        first += std::log(1.0 + inner);
    }
    double second = 0.0;
    for (auto [i, k] : neg) {
        double inner = 0.0;
        for (auto [a, j] : pos) {
            if (a == i) {
                inner += std::exp(prm.beta * (prm.lambda - s.s(a, j)));
            }
        }
        second += std::log(1.0 + inner);
    }
    double loss = 0.0;
    if (!pos.empty()) {
        loss += prm.neg_scale * first / static_cast<double>(pos.size());
    }
    if (!neg.empty()) {
        loss += prm.pos_scale * second / static_cast<double>(neg.size());
    }
    return loss;
}

// Direct double sum over the symmetric softmax terms.
double
clip_oracle(const std::vector<EmbeddingVector>& v,
            const std::vector<EmbeddingVector>& w,
            double tau) {
    const size_t n = v.size();
    auto d = [](const EmbeddingVector& a, const EmbeddingVector& b) {
        double s = 0.0;
        for (size_t t = 0; t < a.dim(); ++t) {
            s += a[t] * b[t];
        }
        return s;
    };
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double z1 = 0.0;
        double z2 = 0.0;
        for (size_t j = 0; j < n; ++j) {
            z1 += std::exp(d(v[i], w[j]) / tau);
            z2 += std::exp(d(w[i], v[j]) / tau);
        }
        total += std::log(std::exp(d(v[i], w[i]) / tau) / z1);
        total += std::log(std::exp(d(w[i], v[i]) / tau) / z2);
    }
    return -total / static_cast<double>(n);
}

SimilarityMatrix
random_similarity(std::mt19937_64& rng, size_t n, double mask_density = 0.35) {
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<double> s(n * n);
    std::vector<uint8_t> pos(n * n, 0), neg(n * n, 0);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            s[i * n + j] = u(rng);  // keeps finite-difference steps inside [-1, 1]
            if (i == j) {
                continue;
            }
            double c = coin(rng);
            if (c < mask_density) {
                pos[i * n + j] = 1;
            } else if (c < 2 * mask_density) {
                neg[i * n + j] = 1;
            }
        }
    }
    // at least one positive and one negative
    pos[1] = 1;
    neg[1] = 0;
    neg[2] = 1;
    pos[2] = 0;
    return SimilarityMatrix(n, n, std::move(s), std::move(pos), std::move(neg));
}

Eigen::MatrixXd
random_unit_rows(std::mt19937_64& rng, size_t n, size_t dim) {
    Eigen::MatrixXd m(n, dim);
    for (size_t i = 0; i < n; ++i) {
        auto v = testing::random_unit(rng, dim);
        for (size_t j = 0; j < dim; ++j) {
            m(i, j) = v[j];
        }
    }
    return m;
}

std::vector<EmbeddingVector>
to_vectors(const Eigen::MatrixXd& m) {
    std::vector<EmbeddingVector> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row[j] = m(i, j);
        }
        out.push_back(EmbeddingVector::from_unit(std::move(row)));
    }
    return out;
}

}  // namespace

TEST_CASE("ProbVector validation", "[losses]") {
    REQUIRE(ProbVector::from({0.25, 0.75}).argmax() == 1);
    REQUIRE(ProbVector::from({0.5, 0.5}).argmax() == 0);
    REQUIRE_ERROR(ProbVector::from({1.0}), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(ProbVector::from({0.5, 0.6}), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(ProbVector::from({-0.1, 1.1}), ErrorCode::INVALID_ARGUMENT);
    auto p = ProbVector::from_logits(std::vector<double>{0.0, std::log(3.0)});
    REQUIRE(p[0] == Approx(0.25).margin(1e-12));
    REQUIRE(p[1] == Approx(0.75).margin(1e-12));
}

TEST_CASE("cross entropy hand values", "[losses]") {
    using V = std::vector<double>;
    REQUIRE(cross_entropy(V{1, 0}, V{1, 0}) == 0.0);
    REQUIRE(std::abs(cross_entropy(V{1, 0}, V{0.5, 0.5}) - 0.693147) < 1e-6);
    REQUIRE(std::abs(cross_entropy(V{0, 1}, V{0.25, 0.75}) - 0.287682) < 1e-6);
    REQUIRE(std::isfinite(cross_entropy(V{1, 0}, V{0, 1})));
    REQUIRE_ERROR(cross_entropy(V{1, 0}, V{0.2, 0.3, 0.5}), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("kl divergence hand values", "[losses]") {
    using V = std::vector<double>;
    REQUIRE(kl_divergence(V{0.3, 0.7}, V{0.3, 0.7}) == Approx(0.0).margin(1e-15));
    REQUIRE(std::abs(kl_divergence(V{0.5, 0.5}, V{0.25, 0.75}) - 0.143841) < 1e-6);
    REQUIRE(std::abs(kl_divergence(V{1, 0}, V{0.5, 0.5}) - 0.693147) < 1e-6);
    REQUIRE_ERROR(kl_divergence(V{1, 0}, V{1}), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("mse hand values", "[losses]") {
    using V = std::vector<double>;
    REQUIRE(mse(V{1, 2, 3}, V{1, 2, 3}) == 0.0);
    REQUIRE(mse(V{0, 0}, V{1, 1}) == 1.0);
    REQUIRE(mse(V{2}, V{0}) == 4.0);
    REQUIRE_ERROR(mse(V{1}, V{1, 2}), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(mse(V{}, V{}), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("multi-similarity hand values", "[losses]") {
    MsParams prm;
    prm.alpha = 2.0;
    prm.beta = 2.0;
    prm.lambda = 0.5;
    // anchor 0, positive 1, negative 2
    std::vector<double> s = {1.0, 0.5, 0.5, 0.5, 1.0, 0.0, 0.5, 0.0, 1.0};
    SimilarityMatrix both(3, 3, s, {0, 1, 0, 0, 0, 0, 0, 0, 0}, {0, 0, 1, 0, 0, 0, 0, 0, 0});
    REQUIRE(std::abs(multi_similarity_loss(both, prm) - 1.386294) < 1e-6);

    SimilarityMatrix only_pos(2, 2, {1.0, 1.0, 1.0, 1.0}, {0, 1, 0, 0}, {0, 0, 0, 0});
    REQUIRE(multi_similarity_loss(only_pos, prm) == 0.0);

    SimilarityMatrix none(2, 2, {1.0, 0.0, 0.0, 1.0}, {0, 0, 0, 0}, {0, 0, 0, 0});
    REQUIRE_ERROR(multi_similarity_loss(none, prm), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("similarity matrix validation", "[losses]") {
    std::vector<double> s = {1.0, 0.2, 0.2, 1.0};
    REQUIRE_ERROR(SimilarityMatrix(2, 2, s, {1, 0, 0, 0}, {0, 0, 0, 0}),
                  ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(SimilarityMatrix(2, 2, s, {0, 1, 0, 0}, {0, 1, 0, 0}),
                  ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(SimilarityMatrix(2, 2, {1.0, 1.5, 0.2, 1.0}, {0, 1, 0, 0}, {0, 0, 0, 0}),
                  ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(SimilarityMatrix(2, 3, {1, 0, 0, 0, 1, 0}, {0, 1, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}),
                  ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(SimilarityMatrix(2, 2, s, {0, 1}, {0, 0, 0, 0}), ErrorCode::INVALID_ARGUMENT);
    // a cross matrix may be rectangular and mask any cell
    SimilarityMatrix cross(1, 3, {0.9, 0.1, -0.3}, {1, 0, 0}, {0, 1, 1},
                           SimilarityMatrix::Kind::CROSS);
    REQUIRE(multi_similarity_loss(cross, MsParams{}) > 0.0);
    REQUIRE_ERROR(MsParams({0.0, 1.0, 0.5}).validate(), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(MsParams({1.0, 1.0, 1.5}).validate(), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("multi-similarity matches the ungrouped formula", "[losses][oracle]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.5, 20.0);
    std::uniform_real_distribution<double> lam(-0.5, 0.9);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = random_similarity(rng, 8);
        MsParams prm{u(rng), u(rng), lam(rng)};
        if (trial % 2 == 1) {
            prm.neg_scale = 1.0 / prm.alpha;
            prm.pos_scale = 1.0 / prm.beta;
        }
        double expected = ms_oracle(s, prm);
        REQUIRE(multi_similarity_loss(s, prm) == Approx(expected).epsilon(1e-12).margin(1e-12));
        REQUIRE(multi_similarity_loss(s, prm) >= 0.0);
    }
}

TEST_CASE("multi-similarity is monotone in positive similarity", "[losses][property]") {
    std::mt19937_64 rng(81);
    // moderate weights keep the per-anchor sums well conditioned in doubles
    MsParams prm{2.0, 4.0, 0.5};
    for (int trial = 0; trial < 100; ++trial) {
        auto s = random_similarity(rng, 6);
        std::vector<double> v(s.values().begin(), s.values().end());
        for (size_t idx = 0; idx < v.size(); ++idx) {
            if (!s.positive(idx / 6, idx % 6) || v[idx] > 0.9) {
                continue;
            }
            auto bumped = v;
            bumped[idx] += 0.05;
            bool has_neg = false;
            for (size_t k = 0; k < 6; ++k) {
                has_neg = has_neg || s.negative(idx / 6, k);
            }
            double before = multi_similarity_loss(s, prm);
            double after = multi_similarity_loss(s.with_values(bumped), prm);
            if (has_neg) {
                REQUIRE(after < before);
            } else {
                REQUIRE(after <= before);
            }
        }
    }
}

TEST_CASE("clip loss hand values", "[losses]") {
    auto e1 = testing::unit({1.0, 0.0});
    auto e2 = testing::unit({0.0, 1.0});
    std::vector<EmbeddingVector> one = {e1};
    REQUIRE(clip_nt_xent(one, one, 1.0) == Approx(0.0).margin(1e-15));
    std::vector<EmbeddingVector> pair = {e1, e2};
    REQUIRE(std::abs(clip_nt_xent(pair, pair, 1.0) - 0.626523) < 1e-6);
    REQUIRE(clip_nt_xent(pair, pair, 1.0) == Approx(-4.0 / 2.0 * std::log(M_E / (M_E + 1.0))));

    std::vector<EmbeddingVector> three = {e1, e2, e1};
    REQUIRE_ERROR(clip_nt_xent(pair, three, 1.0), ErrorCode::INVALID_ARGUMENT);
    std::vector<EmbeddingVector> wide = {testing::unit({1, 0, 0}), testing::unit({0, 1, 0})};
    REQUIRE_ERROR(clip_nt_xent(pair, wide, 1.0), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(clip_nt_xent(pair, pair, 0.0), ErrorCode::INVALID_ARGUMENT);
    REQUIRE_ERROR(clip_nt_xent({}, {}, 1.0), ErrorCode::INVALID_ARGUMENT);
}

TEST_CASE("clip loss matches the direct double sum", "[losses][oracle]") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        auto v = to_vectors(random_unit_rows(rng, 4, 8));
        auto w = to_vectors(random_unit_rows(rng, 4, 8));
        double tau = 0.05 + 0.01 * trial;
        REQUIRE(clip_nt_xent(v, w, tau) == Approx(clip_oracle(v, w, tau)).epsilon(1e-10));
    }
}

TEST_CASE("clip loss is invariant under a shared permutation", "[losses][property]") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 50; ++trial) {
        auto v = to_vectors(random_unit_rows(rng, 6, 8));
        auto w = to_vectors(random_unit_rows(rng, 6, 8));
        std::vector<size_t> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<EmbeddingVector> pv, pw;
        for (size_t i : perm) {
            pv.push_back(v[i]);
            pw.push_back(w[i]);
        }
        REQUIRE(clip_nt_xent(pv, pw, 0.3) == Approx(clip_nt_xent(v, w, 0.3)).epsilon(1e-12));
    }
}

TEST_CASE("kl is non-negative and cross entropy decomposes", "[losses][property]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t c = 2 + trial % 7;
        auto p = random_simplex(rng, c);
        auto q = random_simplex(rng, c);
        REQUIRE(kl_divergence(p, q) >= 0.0);
        REQUIRE(kl_divergence(p, p) == Approx(0.0).margin(1e-12));
        REQUIRE(std::abs(cross_entropy(p, q) - (kl_divergence(p, q) + entropy(p))) < 1e-9);
    }
}

TEST_CASE("analytic gradients agree with finite differences", "[losses][gradient]") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double tol = 1e-4;
    double worst = 0.0;

    SECTION("mse") {
        for (int t = 0; t < 100; ++t) {
            std::vector<double> y(5), x(5);
            for (size_t i = 0; i < 5; ++i) {
                y[i] = normal(rng);
                x[i] = normal(rng);
            }
            DifferentiableFn f = [&](std::span<const double> yh, std::vector<double>* g) {
                if (g) {
                    *g = mse_grad(y, yh);
                }
                return mse(y, yh);
            };
            worst = std::max(worst, grad_check(f, x));
        }
        REQUIRE(worst < 1e-6);
    }
    SECTION("cross entropy wrt probabilities") {
        for (int t = 0; t < 100; ++t) {
            auto y = random_simplex(rng, 4);
            auto p = random_simplex(rng, 4);
            DifferentiableFn f = [&](std::span<const double> x, std::vector<double>* g) {
                if (g) {
                    *g = cross_entropy_grad(y, x);
                }
                return cross_entropy(y, x);
            };
            worst = std::max(worst, grad_check(f, p, 1e-7));
        }
        REQUIRE(worst < tol);
    }
    SECTION("cross entropy through softmax") {
        for (int t = 0; t < 100; ++t) {
            auto y = random_simplex(rng, 5);
            std::vector<double> z(5);
            for (auto& v : z) {
                v = 2.0 * normal(rng);
            }
            DifferentiableFn f = [&](std::span<const double> x, std::vector<double>* g) {
                if (g) {
                    *g = softmax_cross_entropy_grad(y, x);
                }
                return cross_entropy(y, softmax(x));
            };
            worst = std::max(worst, grad_check(f, z));
        }
        REQUIRE(worst < tol);
    }
    SECTION("kl wrt q") {
        for (int t = 0; t < 100; ++t) {
            auto p = random_simplex(rng, 4);
            auto q = random_simplex(rng, 4);
            DifferentiableFn f = [&](std::span<const double> x, std::vector<double>* g) {
                if (g) {
                    *g = kl_divergence_grad_q(p, x);
                }
                return kl_divergence(p, x);
            };
            worst = std::max(worst, grad_check(f, q, 1e-7));
        }
        REQUIRE(worst < tol);
    }
    SECTION("multi-similarity wrt S") {
        for (int t = 0; t < 100; ++t) {
            auto s = random_similarity(rng, 8);
            MsParams prm{2.0, 10.0, 0.5};
            DifferentiableFn f = [&](std::span<const double> x, std::vector<double>* g) {
                auto r = multi_similarity_loss_with_grad(
                    s.with_values(std::vector<double>(x.begin(), x.end())), prm);
                if (g) {
                    *g = r.grad;
                }
                return r.loss;
            };
            worst = std::max(worst, grad_check(f, s.values()));
        }
        REQUIRE(worst < tol);
    }
    SECTION("clip wrt V and W") {
        for (int t = 0; t < 100; ++t) {
            const Eigen::Index n = 4, d = 8;
            const double tau = 0.5;
            Eigen::MatrixXd w = random_unit_rows(rng, n, d);
            Eigen::MatrixXd v = random_unit_rows(rng, n, d);
            std::vector<double> flat(v.data(), v.data() + v.size());
            DifferentiableFn fv = [&](std::span<const double> x, std::vector<double>* g) {
                Eigen::Map<const Eigen::MatrixXd> vm(x.data(), n, d);
                auto r = clip_nt_xent_with_grad(vm, w, tau);
                if (g) {
                    g->assign(r.grad_v.data(), r.grad_v.data() + r.grad_v.size());
                }
                return r.loss;
            };
            worst = std::max(worst, grad_check(fv, flat));
            std::vector<double> wflat(w.data(), w.data() + w.size());
            DifferentiableFn fw = [&](std::span<const double> x, std::vector<double>* g) {
                Eigen::Map<const Eigen::MatrixXd> wm(x.data(), n, d);
                auto r = clip_nt_xent_with_grad(v, wm, tau);
                if (g) {
                    g->assign(r.grad_w.data(), r.grad_w.data() + r.grad_w.size());
                }
                return r.loss;
            };
            worst = std::max(worst, grad_check(fw, wflat));
        }
        REQUIRE(worst < tol);
    }
}

TEST_CASE("grad_check flags a wrong gradient", "[losses][gradient]") {
    DifferentiableFn f = [](std::span<const double> x, std::vector<double>* g) {
        if (g) {
            *g = {x[0]};  // true derivative of x^2 is 2x
        }
        return x[0] * x[0];
    };
    std::vector<double> x = {3.0};
    REQUIRE(grad_check(f, x) > 0.4);
}
