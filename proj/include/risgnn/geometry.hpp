// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace risgnn {

// Antenna array description. A ULA has n_y = 1; a UPA factors into an x- and
// a y-axis ULA whose responses combine by Kronecker product.
struct ArrayGeometry {
    enum class Kind { ULA, UPA };

    Kind kind = Kind::ULA;
    int n_x = 1;
    int n_y = 1;
    double spacing_over_wavelength = 0.5;

    int element_count() const { return n_x * n_y; }

    static ArrayGeometry ula(int n, double spacing = 0.5) {
        ArrayGeometry g;
        g.kind = Kind::ULA;
        g.n_x = n;
        g.n_y = 1;
        g.spacing_over_wavelength = spacing;
        return g;
    }

    static ArrayGeometry upa(int n_x, int n_y, double spacing = 0.5) {
        ArrayGeometry g;
        g.kind = Kind::UPA;
        g.n_x = n_x;
        g.n_y = n_y;
        g.spacing_over_wavelength = spacing;
        return g;
    }
};

// Array response of an n-element ULA for direction parameter phi (normalized
// sine-angle). Element index set is symmetric around zero: {n' - (n-1)/2}.
// The vector has unit 2-norm by the 1/sqrt(n) prefactor.
inline Eigen::VectorXcd steering_ula(double phi, int n, double spacing_over_wavelength = 0.5) {
    if (n < 1) throw std::invalid_argument("steering_ula: element count must be positive");
    Eigen::VectorXcd a(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    const double rate = 2.0 * M_PI * spacing_over_wavelength * phi;
    for (int i = 0; i < n; ++i) {
        const double idx = static_cast<double>(i) - static_cast<double>(n - 1) / 2.0;
        a(i) = std::polar(scale, -rate * idx);
    }
    return a;
}

// UPA response: Kronecker product of the x-axis and y-axis ULA responses.
inline Eigen::VectorXcd steering_upa(double phi1, double phi2, const ArrayGeometry& geom) {
    if (geom.kind != ArrayGeometry::Kind::UPA)
        throw std::invalid_argument("steering_upa: geometry must be UPA");
    const Eigen::VectorXcd ax = steering_ula(phi1, geom.n_x, geom.spacing_over_wavelength);
    const Eigen::VectorXcd ay = steering_ula(phi2, geom.n_y, geom.spacing_over_wavelength);
    Eigen::VectorXcd a(geom.n_x * geom.n_y);
    for (int x = 0; x < geom.n_x; ++x)
        for (int y = 0; y < geom.n_y; ++y) a(x * geom.n_y + y) = ax(x) * ay(y);
    return a;
}

// Response of an arbitrary geometry; ULA ignores phi2.
inline Eigen::VectorXcd steering(const ArrayGeometry& geom, double phi1, double phi2) {
    if (geom.kind == ArrayGeometry::Kind::ULA)
        return steering_ula(phi1, geom.n_x, geom.spacing_over_wavelength);
    return steering_upa(phi1, phi2, geom);
}

}  // namespace risgnn
