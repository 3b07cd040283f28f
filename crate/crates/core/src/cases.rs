//! Manufactured test problems.

use crate::geometry::{ImplicitDomain, Point2};

/// An analytic Poisson problem `−Δu = f` on the hold-all square with a
/// Dirichlet interface `Γ = ∂D`.
pub trait AnalyticCase: Send + Sync {
    fn exact_u(&self, p: Point2) -> f64;
    fn exact_grad(&self, p: Point2) -> Point2;
    fn source_f(&self, p: Point2) -> f64;
    /// Dirichlet datum `g` on `Γ`.
    fn interface_g(&self, p: Point2) -> f64;
    /// Smooth extension `g̃` of `g` to the whole square.
    fn extension_g_tilde(&self, p: Point2) -> f64;
    /// Dirichlet value on the outer boundary `∂Ω`.
    fn outer_value(&self, p: Point2) -> f64;
    fn domain(&self) -> &ImplicitDomain;
}

/// Which datum is imposed on the outer boundary of the square.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OuterCondition {
    /// Trace of the manufactured solution (consistent with `exact_u`).
    #[default]
    ExactTrace,
    /// Homogeneous data `u = 0`, inconsistent with `exact_u` on `∂Ω`.
    Zero,
}

/// Circle-interface test case: with `a = 4 − x²`, `b = 4 − y²`,
///
/// ```text
/// u = a·b                    outside the unit disk
/// u = a·b·exp(1 − x² − y²)   inside (closed disk)
/// g̃ = a·b·cos(1 − x² − y²)
/// ```
#[derive(Clone, Debug)]
pub struct CircleInterfaceCase {
    domain: ImplicitDomain,
    outer: OuterCondition,
}

impl CircleInterfaceCase {
    pub fn new(outer: OuterCondition) -> Self {
        CircleInterfaceCase {
            domain: ImplicitDomain::unit_circle(),
            outer,
        }
    }
}

impl Default for CircleInterfaceCase {
    fn default() -> Self {
        Self::new(OuterCondition::ExactTrace)
    }
}

/// The standard circle-interface case with the exact trace on `∂Ω`.
pub fn schlottbom_case() -> CircleInterfaceCase {
    CircleInterfaceCase::default()
}

#[inline]
fn ab(p: Point2) -> (f64, f64) {
    (4.0 - p.x * p.x, 4.0 - p.y * p.y)
}

#[inline]
fn inside(dom: &ImplicitDomain, p: Point2) -> bool {
    dom.signed_distance(p) <= 0.0
}

fn outer_u(p: Point2) -> f64 {
    let (a, b) = ab(p);
    a * b
}

fn outer_grad(p: Point2) -> Point2 {
    let (a, b) = ab(p);
    Point2::xy(-2.0 * p.x * b, -2.0 * p.y * a)
}

fn outer_f(p: Point2) -> f64 {
    let (a, b) = ab(p);
    2.0 * (a + b)
}

impl AnalyticCase for CircleInterfaceCase {
    fn exact_u(&self, p: Point2) -> f64 {
        if inside(&self.domain, p) {
            let (a, b) = ab(p);
            a * b * (1.0 - p.x * p.x - p.y * p.y).exp()
        } else {
            outer_u(p)
        }
    }

    fn exact_grad(&self, p: Point2) -> Point2 {
        if inside(&self.domain, p) {
            let (a, b) = ab(p);
            let e = (1.0 - p.x * p.x - p.y * p.y).exp();
            Point2::xy(-2.0 * p.x * b * e * (1.0 + a), -2.0 * p.y * a * e * (1.0 + b))
        } else {
            outer_grad(p)
        }
    }

    fn source_f(&self, p: Point2) -> f64 {
        if inside(&self.domain, p) {
            let (a, b) = ab(p);
            let (x2, y2) = (p.x * p.x, p.y * p.y);
            let e = (1.0 - x2 - y2).exp();
            let uxx = b * e * (-2.0 + 8.0 * x2 + a * (4.0 * x2 - 2.0));
            let uyy = a * e * (-2.0 + 8.0 * y2 + b * (4.0 * y2 - 2.0));
            -(uxx + uyy)
        } else {
            outer_f(p)
        }
    }

    fn interface_g(&self, p: Point2) -> f64 {
        outer_u(p)
    }

    fn extension_g_tilde(&self, p: Point2) -> f64 {
        let (a, b) = ab(p);
        a * b * (1.0 - p.x * p.x - p.y * p.y).cos()
    }

    fn outer_value(&self, p: Point2) -> f64 {
        match self.outer {
            OuterCondition::ExactTrace => self.exact_u(p),
            OuterCondition::Zero => 0.0,
        }
    }

    fn domain(&self) -> &ImplicitDomain {
        &self.domain
    }
}

/// The smooth outer branch `u = (4 − x²)(4 − y²)` posed on the whole square
/// with Dirichlet data on `∂Ω` only. The interface lies outside the square,
/// so no diffuse interface constraint is active.
#[derive(Clone, Debug)]
pub struct PolygonalCase {
    domain: ImplicitDomain,
}

impl Default for PolygonalCase {
    fn default() -> Self {
        // far away from Ω, so every triangle is free
        PolygonalCase {
            domain: ImplicitDomain::circle(Point2::xy(100.0, 100.0), 1.0),
        }
    }
}

impl AnalyticCase for PolygonalCase {
    fn exact_u(&self, p: Point2) -> f64 {
        outer_u(p)
    }
    fn exact_grad(&self, p: Point2) -> Point2 {
        outer_grad(p)
    }
    fn source_f(&self, p: Point2) -> f64 {
        outer_f(p)
    }
    fn interface_g(&self, p: Point2) -> f64 {
        outer_u(p)
    }
    fn extension_g_tilde(&self, p: Point2) -> f64 {
        outer_u(p)
    }
    fn outer_value(&self, p: Point2) -> f64 {
        outer_u(p)
    }
    fn domain(&self) -> &ImplicitDomain {
        &self.domain
    }
}
