//! Objectives scanned by the condition checks.

use std::sync::Arc;

use super::{central_jacobian, Objective, ObjectiveError};
use crate::expr::MapDerivatives;
use crate::numlin::{self, Matrix};

fn hessian_matrix(d: &MapDerivatives, c: usize, x: &[f64]) -> Result<Matrix, ObjectiveError> {
    Ok(Matrix::from_rows(&d.hessian(c, x)?))
}

/// `‖∇g_c(x)‖` for one component of a map; residual form `(∇g, Hess g)`.
pub struct GradientNorm {
    d: Arc<MapDerivatives>,
    c: usize,
    id: String,
}

impl GradientNorm {
    /// `d` must carry second derivatives.
    pub fn new(d: Arc<MapDerivatives>, c: usize, id: impl Into<String>) -> Self {
        assert!(d.has_hessians(), "gradient-norm objective needs second derivatives");
        GradientNorm { d, c, id: id.into() }
    }
}

impl Objective for GradientNorm {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn dim(&self) -> usize {
        self.d.n_in()
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(numlin::norm2(&self.d.gradient(self.c, x)?))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let g = self.d.gradient(self.c, x)?;
        let n = numlin::norm2(&g);
        if n == 0.0 {
            return Ok(vec![0.0; g.len()]);
        }
        let h = hessian_matrix(&self.d, self.c, x)?;
        Ok(h.matvec(&g).into_iter().map(|v| v / n).collect())
    }

    fn has_residual(&self) -> bool {
        true
    }

    fn residual(&self, x: &[f64]) -> Result<(Vec<f64>, Matrix), ObjectiveError> {
        Ok((self.d.gradient(self.c, x)?, hessian_matrix(&self.d, self.c, x)?))
    }
}

/// `ν(Dg(x))`, the smallest singular value of the Jacobian of `g: ℝⁿ → ℝᵐ`.
pub struct NuObjective {
    d: Arc<MapDerivatives>,
    id: String,
}

impl NuObjective {
    pub fn new(d: Arc<MapDerivatives>, id: impl Into<String>) -> Self {
        assert!(d.has_hessians(), "nu objective needs second derivatives");
        assert!(d.n_out() <= d.n_in(), "nu needs m <= n");
        NuObjective { d, id: id.into() }
    }
}

impl Objective for NuObjective {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn dim(&self) -> usize {
        self.d.n_in()
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(numlin::nu(&self.d.jacobian(x)?)?)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let jac = self.d.jacobian(x)?;
        let svd = numlin::svd_wide(&jac)?;
        let k = svd.values.len() - 1;
        let (psi, phi) = (&svd.left[k], &svd.right[k]);
        let n = self.d.n_in();
        let mut out = vec![0.0; n];
        for (i, &pi) in psi.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            let h = self.d.hessian(i, x)?;
            for (j, &pj) in phi.iter().enumerate() {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += pi * pj * h[j][k];
                }
            }
        }
        Ok(out)
    }

    fn has_residual(&self) -> bool {
        self.d.n_out() == 1
    }

    fn residual(&self, x: &[f64]) -> Result<(Vec<f64>, Matrix), ObjectiveError> {
        Ok((self.d.gradient(0, x)?, hessian_matrix(&self.d, 0, x)?))
    }
}

/// `‖f(x) − y‖` for a fixed target `y`.
pub struct Distance {
    d: Arc<MapDerivatives>,
    target: Vec<f64>,
    id: String,
}

impl Distance {
    pub fn new(d: Arc<MapDerivatives>, target: Vec<f64>) -> Self {
        assert_eq!(d.n_out(), target.len());
        let id = format!("distance_to({})", fmt_point(&target));
        Distance { d, target, id }
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

pub(crate) fn fmt_point(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

impl Objective for Distance {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn dim(&self) -> usize {
        self.d.n_in()
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let v = self.d.map().eval(x)?;
        Ok(numlin::norm2(&v.iter().zip(&self.target).map(|(a, b)| a - b).collect::<Vec<_>>()))
    }

    fn has_residual(&self) -> bool {
        true
    }

    fn residual(&self, x: &[f64]) -> Result<(Vec<f64>, Matrix), ObjectiveError> {
        let v = self.d.map().eval(x)?;
        let res = v.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        Ok((res, self.d.jacobian(x)?))
    }
}

/// `‖⋀ⱼ ∇fⱼ‖ / ‖⋀_{j≠i} ∇fⱼ‖` for a square map.
pub struct WedgeRatio {
    d: Arc<MapDerivatives>,
    i: usize,
    id: String,
}

impl WedgeRatio {
    pub fn new(d: Arc<MapDerivatives>, i: usize, id: impl Into<String>) -> Self {
        assert!(i < d.n_out());
        WedgeRatio { d, i, id: id.into() }
    }
}

impl Objective for WedgeRatio {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn dim(&self) -> usize {
        self.d.n_in()
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let rows = self.d.jacobian(x)?.to_rows();
        let all: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let rest: Vec<&[f64]> = all
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != self.i)
            .map(|(_, v)| *v)
            .collect();
        let den = numlin::wedge_norm(&rest)?;
        if den == 0.0 || !den.is_finite() {
            return Err(ObjectiveError::Undefined(format!(
                "wedge of the gradients other than f{} vanishes",
                self.i + 1
            )));
        }
        Ok(numlin::wedge_norm(&all)? / den)
    }
}

/// `‖∇g_{k+1}|_X‖`: the gradient of the last component of `G_{k+1}`
/// projected onto the tangent space of the level set of its first `k`
/// components.
pub struct ProjectedGradient {
    d: Arc<MapDerivatives>,
    id: String,
}

impl ProjectedGradient {
    /// `d` holds `(g₁, …, g_{k+1})`.
    pub fn new(d: Arc<MapDerivatives>, id: impl Into<String>) -> Self {
        ProjectedGradient { d, id: id.into() }
    }

    fn project(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let rows = self.d.jacobian(x)?.to_rows();
        let (last, cons) = rows.split_last().expect("at least one component");
        let refs: Vec<&[f64]> = cons.iter().map(Vec::as_slice).collect();
        Ok(numlin::tangent_project(last, &refs)?)
    }
}

impl Objective for ProjectedGradient {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn dim(&self) -> usize {
        self.d.n_in()
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(numlin::norm2(&self.project(x)?))
    }

    fn has_residual(&self) -> bool {
        true
    }

    fn residual(&self, x: &[f64]) -> Result<(Vec<f64>, Matrix), ObjectiveError> {
        let r = self.project(x)?;
        let j = central_jacobian(|y| self.project(y), x)?;
        Ok((r, j))
    }
}

type BoxedFn = Box<dyn Fn(&[f64]) -> Result<f64, ObjectiveError> + Send + Sync>;

/// Objective from a closure; gradients by central differences.
pub struct FnObjective {
    id: String,
    dim: usize,
    f: BoxedFn,
}

impl FnObjective {
    pub fn new<F>(id: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Send + Sync + 'static,
    {
        FnObjective { id: id.into(), dim, f: Box::new(f) }
    }
}

impl Objective for FnObjective {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;
    use crate::scan::{central_gradient, sphere_min, ScanOptions};

    fn derivs(src: &str) -> Arc<MapDerivatives> {
        Arc::new(MapDerivatives::second_order(&parse_map(src).unwrap()))
    }

    const KING: &str = "f1 = x2*(2*x1^2*x2^2 - 9*x1*x2 + 12)";

    #[test]
    fn king_gradient_norm_below_bound_at_r_10() {
        let obj = GradientNorm::new(derivs(KING), 0, "grad");
        let m = sphere_min(&obj, 10.0, &ScanOptions::default()).unwrap();
        assert!(m.value <= 0.1, "value {}", m.value);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let d = derivs("f1 = x1^2*x2 + exp(x3/3); f2 = x2 - x3^3 + x1*x3");
        let x = [0.3, -1.2, 0.7];
        let nu = NuObjective::new(d.clone(), "nu");
        let fd = central_gradient(|y| nu.value(y), &x).unwrap();
        let an = nu.gradient(&x).unwrap();
        for (a, b) in an.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "{an:?} vs {fd:?}");
        }
        let gn = GradientNorm::new(d, 1, "g");
        let fd = central_gradient(|y| gn.value(y), &x).unwrap();
        let an = gn.gradient(&x).unwrap();
        for (a, b) in an.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn nu_equals_gradient_norm_for_scalar_maps() {
        let d = derivs("f1 = x1 - 3*x1^3*x2^2 + 2*x1^4*x2^3 + x2*x3");
        let nu = NuObjective::new(d.clone(), "nu");
        let gn = GradientNorm::new(d, 0, "g");
        for x in [[1.0, 2.0, 3.0], [100.0, 0.01, 0.0], [-0.5, 0.25, 7.0]] {
            assert!((nu.value(&x).unwrap() - gn.value(&x).unwrap()).abs() <= 1e-12 * gn.value(&x).unwrap());
        }
    }

    #[test]
    fn wedge_ratio_of_exp_pair_is_one() {
        let d = Arc::new(MapDerivatives::first_order(&parse_map("f1 = x1; f2 = exp(x2)").unwrap()));
        let w = WedgeRatio::new(d, 0, "w");
        for x in [[0.0, 0.0], [3.0, -20.0], [-1.0, 30.0]] {
            assert!((w.value(&x).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn wedge_ratio_reports_vanishing_denominator() {
        let d = Arc::new(MapDerivatives::first_order(&parse_map("f1 = x1; f2 = x2^2").unwrap()));
        let w = WedgeRatio::new(d, 0, "w");
        assert!(w.value(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn projected_gradient_is_tangent() {
        let d = Arc::new(MapDerivatives::first_order(&parse_map("f1 = x1; f2 = x1 + x2 + x3").unwrap()));
        let p = ProjectedGradient::new(d, "pg");
        let (r, _) = p.residual(&[1.0, 2.0, 3.0]).unwrap();
        assert!(r[0].abs() < 1e-15);
        assert!((p.value(&[1.0, 2.0, 3.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }
}
