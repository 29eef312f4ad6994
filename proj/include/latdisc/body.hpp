#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace latdisc {

using Point = std::vector<double>;
using Vec2 = std::array<double, 2>;

class Body;

struct Ball {
    int dim;
    double radius;
};

struct Ellipsoid {
    std::vector<double> semiaxes;
};

/// |x/a|^m + |y/b|^m <= 1, m even.
struct Superellipse2D {
    int exponent;
    double a;
    double b;
};

/// Polar set of Superellipse2D{exponent, a, b}: gauge ||(a x, b y)||_q with
/// q = m/(m-1), i.e. semiaxes 1/a, 1/b.
struct PolarSuperellipse2D {
    int exponent;
    double a;
    double b;
};

/// A x for x in the inner body, A the counterclockwise rotation by `angle`.
struct Rotated2D {
    std::shared_ptr<const Body> inner;
    double angle;
};

/// Convex body containing the origin in its interior. Immutable value.
class Body {
  public:
    using Shape = std::variant<Ball, Ellipsoid, Superellipse2D, PolarSuperellipse2D, Rotated2D>;

    static Body ball(int dim, double radius);
    static Body ellipsoid(std::vector<double> semiaxes);
    static Body superellipse(int exponent, double a, double b);
    static Body polar_superellipse(int exponent, double a, double b);
    static Body rotated(const Body& inner, double angle);

    const Shape& shape() const { return shape_; }
    int dim() const;
    bool planar() const { return dim() == 2; }

    double volume() const;
    /// Radius of the largest origin-centred ball contained in the body.
    double inradius() const;
    /// Canonical text form accepted by parse_body.
    std::string descriptor() const;

  private:
    explicit Body(Shape s) : shape_(std::move(s)) {}
    Shape shape_;
};

/// Parses `ball:d=3,r=1`, `ellipsoid:a=2,b=1`, `ellipsoid:axes=2;1;3`,
/// `superellipse:m=4,a=1,b=1,theta=0.5`, `polar:<body>`.
Body parse_body(std::string_view text);

/// Minkowski functional: the unique lambda >= 0 with x in lambda * boundary.
double gauge(const Body& body, std::span<const double> x);
/// sup over the body of <x, xi>; rejects xi = 0.
double support(const Body& body, std::span<const double> xi);
Body polar(const Body& body);
/// Boundary point whose outward normal is parallel to xi.
Point normal_point(const Body& body, std::span<const double> xi);
Body rotate(const Body& body, double theta);

// Planar boundary parametrization x(t), t in [0, 2pi), counterclockwise.
Vec2 boundary_point(const Body& body, double t);
/// x(t) and its first four derivatives.
std::array<Vec2, 5> boundary_jet(const Body& body, double t);
Vec2 boundary_velocity(const Body& body, double t);
/// x(t) and x'(t).
std::array<Vec2, 2> boundary_point_velocity(const Body& body, double t);
Vec2 outward_normal(const Body& body, double t);

/// Signed curvature of the planar boundary at x(t); +inf where the
/// parametrization is singular (polar of a flat point).
double curvature(const Body& body, double t);
/// Gaussian curvature of a Ball/Ellipsoid boundary at a boundary point.
double gaussian_curvature(const Body& body, std::span<const double> point);

struct FlatPoint {
    Vec2 point;
    Vec2 normal;
    Vec2 tangent;
    int type;
    double parameter;
};

inline constexpr double kFlatTolerance = 1e-8;

/// Boundary points of vanishing curvature with their estimated type m_P.
std::vector<FlatPoint> flat_points(const Body& body);

Vec2 rotate_vec(const Vec2& v, double theta);

}  // namespace latdisc
