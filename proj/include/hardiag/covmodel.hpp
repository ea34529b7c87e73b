#pragma once

#include "hardiag/design.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace hardiag {

enum class SpectralKind { White, Ar, Arma, SpikedAr2, Convex, Tabulated };

// Normalized spectral density (integral over [-pi, pi] equal to one) and the
// correlation matrix Sigma(f) it generates.
class SpectralModel {
public:
    static SpectralModel white();
    static SpectralModel ar(std::vector<double> coefficients);
    static SpectralModel arma(std::vector<double> ar_coefficients, std::vector<double> ma_coefficients);
    static SpectralModel spiked_ar2(double radius, double angle);
    static SpectralModel convex(const SpectralModel& base, double c1, double c2);
    // values on the uniform grid 0, pi/(m-1), ..., pi; linear interpolation
    static SpectralModel tabulated(std::vector<double> values);

    SpectralKind kind() const;
    double density(double omega) const;
    // rho(0), ..., rho(n-1)
    Eigen::VectorXd autocorrelations(int n) const;
    Eigen::MatrixXd covariance(int n) const;
    std::string describe() const;

    // AR coefficients for kinds White, Ar and SpikedAr2; empty otherwise.
    std::vector<double> ar_form() const;

private:
    struct White {};
    struct Ar {
        std::vector<double> phi;
        double gamma0;
    };
    struct Arma {
        std::vector<double> phi, theta;
        double scale;
    };
    struct Spiked {
        double radius, angle;
    };
    struct Convex {
        std::shared_ptr<const SpectralModel> base;
        double c1, c2;
    };
    struct Tabulated {
        std::vector<double> values;
    };
    using Data = std::variant<White, Ar, Arma, Spiked, Convex, Tabulated>;

    explicit SpectralModel(Data d) : data_(std::move(d)) {}
    Data data_;
};

// Convex combination c1 f + c2/(2 pi) with f an AR model of order <= 2.
SpectralModel ar2ext(const SpectralModel& base, double c1, double c2);

struct CovModelGrid {
    std::vector<SpectralModel> members;
    std::string label;
};

// Spiked AR(2) member m of a sequence whose projected covariance concentrates
// at frequency gamma.
SpectralModel boundary_sequence(double gamma, const SubspaceBasis& L, int m);

// Pi_perp Sigma Pi_perp / ||.||_F
Eigen::MatrixXd l_of_sigma(const Eigen::MatrixXd& sigma, const SubspaceBasis& L);
Eigen::MatrixXd sharp_transform(const Eigen::MatrixXd& sigma, const SubspaceBasis& L);
Eigen::MatrixXd natural_transform(const Eigen::MatrixXd& sigma, const SubspaceBasis& L);

// AR(1) members 1 - 10^{-j/2}, j = 2..12 (or -(...) for the pi side).
CovModelGrid default_boundary_grid(bool negative = false);

} // namespace hardiag
