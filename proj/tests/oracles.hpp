// Independent reference computations used by the tests. Nothing here calls
// into the library's assembly or solver code.
#pragma once

#include "mspint/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using mspint::Mat;
using mspint::Vec;

// Bilinear shape functions on the reference square, corners (0,0),(1,0),(1,1),(0,1).
inline double shape(int a, double x, double y) {
    switch (a) {
        case 0: return (1 - x) * (1 - y);
        case 1: return x * (1 - y);
        case 2: return x * y;
        default: return (1 - x) * y;
    }
}

inline std::array<double, 2> shape_grad(int a, double x, double y) {
    switch (a) {
        case 0: return {-(1 - y), -(1 - x)};
        case 1: return {1 - y, -x};
        case 2: return {y, x};
        default: return {-y, 1 - x};
    }
}

// 3-point Gauss-Legendre on [0,1]; exact for the polynomial degrees involved.
inline void gauss3(std::array<double, 3>& pts, std::array<double, 3>& wts) {
    const double r = std::sqrt(0.6);
    pts = {0.5 * (1 - r), 0.5, 0.5 * (1 + r)};
    wts = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
}

// Element matrices on a square of side h by quadrature.
inline Eigen::Matrix4d quad_stiffness() {
    std::array<double, 3> p, w;
    gauss3(p, w);
    Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
    for (int qx = 0; qx < 3; ++qx)
        for (int qy = 0; qy < 3; ++qy)
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    auto ga = shape_grad(a, p[qx], p[qy]), gb = shape_grad(b, p[qx], p[qy]);
                    k(a, b) += w[qx] * w[qy] * (ga[0] * gb[0] + ga[1] * gb[1]);
                }
    return k;  // the h-scaling cancels in 2-D
}

inline Eigen::Matrix4d quad_mass(double h) {
    std::array<double, 3> p, w;
    gauss3(p, w);
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    for (int qx = 0; qx < 3; ++qx)
        for (int qy = 0; qy < 3; ++qy)
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    m(a, b) += w[qx] * w[qy] * shape(a, p[qx], p[qy]) * shape(b, p[qx], p[qy]);
    return m * h * h;
}

// Dense Dirichlet-eliminated matrices on an n x n grid with cell coefficients
// (cell (ci,cj) -> coef[cj*n+ci]); interior numbering (j-1)(n-1)+(i-1).
struct DenseFem {
    Mat mass, stiffness;
};

inline DenseFem dense_fem(int n, const std::vector<double>& coef) {
    const double h = 1.0 / n;
    const int m = (n - 1) * (n - 1);
    DenseFem d{Mat::Zero(m, m), Mat::Zero(m, m)};
    const Eigen::Matrix4d ke = quad_stiffness(), me = quad_mass(h);
    auto id = [n](int i, int j) { return (i > 0 && j > 0 && i < n && j < n) ? (j - 1) * (n - 1) + (i - 1) : -1; };
    for (int cj = 0; cj < n; ++cj)
        for (int ci = 0; ci < n; ++ci) {
            const int nodes[4] = {id(ci, cj), id(ci + 1, cj), id(ci + 1, cj + 1), id(ci, cj + 1)};
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    if (nodes[a] < 0 || nodes[b] < 0) continue;
                    d.stiffness(nodes[a], nodes[b]) += coef[cj * n + ci] * ke(a, b);
                    d.mass(nodes[a], nodes[b]) += me(a, b);
                }
        }
    return d;
}

// Union-find over cells; returns component representative per cell (-1 where mask is 0).
inline std::vector<int> components(int width, int height, const std::vector<int>& mask) {
    std::vector<int> parent(mask.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const int c = y * width + x;
            if (!mask[c]) continue;
            if (x + 1 < width && mask[c + 1]) unite(c, c + 1);
            if (y + 1 < height && mask[c + width]) unite(c, c + width);
        }
    std::vector<int> rep(mask.size(), -1);
    for (std::size_t c = 0; c < mask.size(); ++c)
        if (mask[c]) rep[c] = find(static_cast<int>(c));
    return rep;
}

// min v^T A v s.t. C v = r via the full KKT matrix.
// min v^T A v subject to C v = r, by the null-space method: v = C^+ r + Z y with CZ = 0.
inline Vec dense_kkt(const Mat& A, const Mat& C, const Vec& r) {
    const auto n = A.rows(), m = C.rows();
    Eigen::HouseholderQR<Mat> qr(C.transpose());
    const Mat Q = qr.householderQ() * Mat::Identity(n, n);
    const Mat R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    // C = R^T Q1^T, so C^+ r = Q1 R^{-T} r
    const Vec xp = Q.leftCols(m) * R.transpose().triangularView<Eigen::Lower>().solve(r);
    const Mat Z = Q.rightCols(n - m);
    const Vec y = (Z.transpose() * A * Z).ldlt().solve(-Z.transpose() * (A * xp));
    return xp + Z * y;
}

inline Mat random_spd(int n, std::mt19937& rng, double shift = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    return a * a.transpose() + shift * Mat::Identity(n, n);
}

inline Mat random_mat(int r, int c, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat a(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) a(i, j) = u(rng);
    return a;
}

// Modified Gram-Schmidt in the inner product <x, y> = x^T G y.
inline Mat orthonormalize(const Mat& X, const Mat& G) {
    Mat Q = X;
    for (Eigen::Index k = 0; k < Q.cols(); ++k) {
        for (Eigen::Index j = 0; j < k; ++j) Q.col(k) -= Q.col(j).dot(G * Q.col(k)) * Q.col(j);
        Q.col(k) /= std::sqrt(Q.col(k).dot(G * Q.col(k)));
    }
    return Q;
}

}  // namespace oracle
