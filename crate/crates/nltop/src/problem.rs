//! Density-based topology-optimization problems: modified-SIMP material
//! interpolation, five objective functions with adjoint gradients, objective
//! clipping, and the two benchmark problem presets.
//!
//! Evaluation always goes raw design -> cone filter -> physics, and gradients
//! come back through the filter, so callers only ever see the raw design
//! vector. The volume constraint is the plain mean of the raw densities.

use crate::error::{Error, Result};
use crate::fem::{
    self, centroid_stress_op, conduction_matrix, elastic_stiffness, ElasticElem, LinearSystem,
    ScalarElem, StressOp,
};
use crate::filter::DensityFilter;
use crate::mesh::Mesh2D;
use serde::{Deserialize, Serialize};

/// Solid Young's modulus.
pub const E0: f64 = 1.0;
/// Poisson ratio for plane stress.
pub const NU: f64 = 0.3;
/// Solid thermal conductivity.
pub const K0: f64 = 1.0;
/// Void Young's modulus of the modified SIMP law.
pub const E_MIN: f64 = 1e-9;
/// Void conductivity. Kept well above the elastic void value so that void
/// regions carrying the distributed heat source stay numerically tame.
pub const K_MIN: f64 = 1e-3;
/// Lower box bound for design densities.
pub const DEFAULT_RHO_MIN: f64 = 1e-6;
/// Default SIMP penalization exponent.
pub const DEFAULT_SIMP_EXPONENT: f64 = 3.0;
/// Default stress relaxation exponent (sigma_e = rho^q * vm).
pub const DEFAULT_STRESS_RELAXATION: f64 = 0.5;

/// Objective clip bounds: a handful of samples from bad starting points produce
/// absurdly large objective values that would otherwise dominate the surface
/// normalization.
pub const CLIP_COMPLIANCE: f64 = 1e4;
pub const CLIP_STRESS: f64 = 5e1;
pub const CLIP_THERMAL_COMPLIANCE: f64 = 1e6;
pub const CLIP_MAX_TEMPERATURE: f64 = 1e4;
pub const CLIP_TEMPERATURE_VARIANCE: f64 = 1e6;
/// Reserved for fluid objectives; no fluid problem is implemented.
pub const CLIP_FLUID: f64 = 1e2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Compliance,
    PNormStress,
    ThermalCompliance,
    PNormMaxTemperature,
    TemperatureVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhysicsKind {
    PlaneStress,
    Conduction,
}

impl ObjectiveKind {
    pub fn physics(self) -> PhysicsKind {
        match self {
            ObjectiveKind::Compliance | ObjectiveKind::PNormStress => PhysicsKind::PlaneStress,
            _ => PhysicsKind::Conduction,
        }
    }

    pub fn default_clip_bound(self) -> f64 {
        match self {
            ObjectiveKind::Compliance => CLIP_COMPLIANCE,
            ObjectiveKind::PNormStress => CLIP_STRESS,
            ObjectiveKind::ThermalCompliance => CLIP_THERMAL_COMPLIANCE,
            ObjectiveKind::PNormMaxTemperature => CLIP_MAX_TEMPERATURE,
            ObjectiveKind::TemperatureVariance => CLIP_TEMPERATURE_VARIANCE,
        }
    }

    /// Whether the p-norm aggregation exponent is meaningful for this kind.
    pub fn uses_aggregation_exponent(self) -> bool {
        matches!(self, ObjectiveKind::PNormStress | ObjectiveKind::PNormMaxTemperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// p-norm aggregation exponent (stress / max-temperature objectives).
    pub p: f64,
    /// Values above this bound are clipped before normalization.
    pub clip_bound: f64,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, p: f64) -> Result<Self> {
        if kind.uses_aggregation_exponent() && !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "aggregation exponent must be >= 1, got {p}"
            )));
        }
        Ok(Self { kind, p, clip_bound: kind.default_clip_bound() })
    }

    pub fn clip(&self, j: f64) -> f64 {
        j.min(self.clip_bound)
    }
}

/// Fixed dofs and loads. Elastic problems address interleaved (ux, uy) dofs;
/// conduction problems address nodes and add a uniform per-element source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryConditions {
    Elastic {
        fixed_dofs: Vec<usize>,
        point_loads: Vec<(usize, f64)>,
    },
    Conduction {
        sink_nodes: Vec<usize>,
        /// Heat generated per unit area, applied on every element.
        uniform_source: f64,
    },
}

/// A ready-to-evaluate problem instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh2D,
    pub objective: ObjectiveSpec,
    pub bc: BoundaryConditions,
    pub volume_fraction: f64,
    pub filter_radius: f64,
    pub rho_min: f64,
    pub simp_exponent: f64,
    pub stress_relaxation: f64,
    filter: DensityFilter,
    system: LinearSystem,
    ke_elastic: ElasticElem,
    ke_scalar: ScalarElem,
    stress_op: StressOp,
}

/// Objective value, optional gradient w.r.t. the raw design, and the state field.
#[derive(Debug, Clone)]
pub struct EvalResult {
    /// Raw (unclipped) objective value.
    pub objective: f64,
    /// dJ/d(rho), already chained through the density filter.
    pub gradient: Option<Vec<f64>>,
    /// Volume fraction of the raw design.
    pub volume: f64,
    /// Displacements (interleaved) or nodal temperatures.
    pub state: Vec<f64>,
}

impl Problem {
    pub fn new(
        mesh: Mesh2D,
        objective: ObjectiveSpec,
        bc: BoundaryConditions,
        volume_fraction: f64,
        filter_radius: f64,
    ) -> Result<Self> {
        if !(0.0 < volume_fraction && volume_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "volume fraction must lie in (0, 1), got {volume_fraction}"
            )));
        }
        let ndofs = match objective.kind.physics() {
            PhysicsKind::PlaneStress => mesh.num_dofs_elastic(),
            PhysicsKind::Conduction => mesh.num_dofs_scalar(),
        };
        let mut system = LinearSystem::new(ndofs);
        match (&bc, objective.kind.physics()) {
            (BoundaryConditions::Elastic { fixed_dofs, point_loads }, PhysicsKind::PlaneStress) => {
                for &d in fixed_dofs {
                    if d >= ndofs {
                        return Err(Error::InvalidParameter(format!("fixed dof {d} out of range")));
                    }
                    system.fix(d);
                }
                for &(d, v) in point_loads {
                    if d >= ndofs {
                        return Err(Error::InvalidParameter(format!("loaded dof {d} out of range")));
                    }
                    system.add_load(d, v);
                }
            }
            (BoundaryConditions::Conduction { sink_nodes, uniform_source }, PhysicsKind::Conduction) => {
                for &n in sink_nodes {
                    if n >= ndofs {
                        return Err(Error::InvalidParameter(format!("sink node {n} out of range")));
                    }
                    system.fix(n);
                }
                let h = mesh.elem_size;
                let nodal = uniform_source * h * h / 4.0;
                for e in 0..mesh.num_elements() {
                    for n in mesh.element_nodes(e) {
                        system.add_load(n, nodal);
                    }
                }
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "boundary conditions do not match the objective's physics".into(),
                ));
            }
        }
        let filter = DensityFilter::new(&mesh, filter_radius)?;
        Ok(Self {
            filter,
            system,
            ke_elastic: elastic_stiffness(1.0, NU)?,
            ke_scalar: conduction_matrix(1.0)?,
            stress_op: centroid_stress_op(E0, NU, mesh.elem_size),
            mesh,
            objective,
            bc,
            volume_fraction,
            filter_radius,
            rho_min: DEFAULT_RHO_MIN,
            simp_exponent: DEFAULT_SIMP_EXPONENT,
            stress_relaxation: DEFAULT_STRESS_RELAXATION,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    /// Volume constraint `mean(rho) - vbar <= 0` and its (constant) gradient value.
    pub fn volume_constraint(&self, rho: &[f64]) -> (f64, f64) {
        let n = rho.len() as f64;
        let mean = rho.iter().sum::<f64>() / n;
        (mean - self.volume_fraction, 1.0 / n)
    }

    pub fn filtered(&self, rho: &[f64]) -> Vec<f64> {
        self.filter.apply(rho)
    }

    pub fn clip(&self, j: f64) -> f64 {
        self.objective.clip(j)
    }

    fn check_design(&self, rho: &[f64]) -> Result<()> {
        if rho.len() != self.mesh.num_elements() {
            return Err(Error::InvalidParameter(format!(
                "design has {} entries for {} elements",
                rho.len(),
                self.mesh.num_elements()
            )));
        }
        let lo = self.rho_min - 1e-12;
        let hi = 1.0 + 1e-12;
        if rho.iter().any(|&v| !v.is_finite() || v < lo || v > hi) {
            return Err(Error::InvalidParameter(
                "design densities must lie in [rho_min, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Evaluates objective (and optionally the design gradient) at a raw design.
    pub fn evaluate(&self, rho: &[f64], want_gradient: bool) -> Result<EvalResult> {
        self.check_design(rho)?;
        let rho_t = self.filter.apply(rho);
        let (objective, grad_filtered, state) = match self.objective.kind.physics() {
            PhysicsKind::PlaneStress => self.eval_elastic(&rho_t, want_gradient)?,
            PhysicsKind::Conduction => self.eval_conduction(&rho_t, want_gradient)?,
        };
        let gradient = grad_filtered.map(|g| self.filter.chain_gradient(&g));
        let n = rho.len() as f64;
        Ok(EvalResult {
            objective,
            gradient,
            volume: rho.iter().sum::<f64>() / n,
            state,
        })
    }

    fn eval_elastic(
        &self,
        rho_t: &[f64],
        want_gradient: bool,
    ) -> Result<(f64, Option<Vec<f64>>, Vec<f64>)> {
        let pen = self.simp_exponent;
        let scale: Vec<f64> = rho_t.iter().map(|&r| E_MIN + r.powf(pen) * (E0 - E_MIN)).collect();
        let fact = fem::factorize_elastic(&self.mesh, &self.ke_elastic, &scale, &self.system)?;
        let u = fact.solve(&self.system.load)?;

        match self.objective.kind {
            ObjectiveKind::Compliance => {
                let j: f64 = self.system.load.iter().zip(&u).map(|(f, u)| f * u).sum();
                let grad = want_gradient.then(|| {
                    let mut g = vec![0.0; rho_t.len()];
                    for e in 0..rho_t.len() {
                        let ue = self.gather8(&u, e);
                        let ce = (self.ke_elastic * ue).dot(&ue);
                        g[e] = -pen * rho_t[e].powf(pen - 1.0) * (E0 - E_MIN) * ce;
                    }
                    g
                });
                Ok((j, grad, u))
            }
            ObjectiveKind::PNormStress => {
                let q = self.stress_relaxation;
                let p = self.objective.p;
                let n = rho_t.len();
                // relaxed von Mises stress per element, evaluated at the centroid
                // with the solid constitutive law
                let mut vm = vec![0.0; n];
                let mut sig = vec![0.0; n];
                let mut svecs = vec![[0.0; 3]; n];
                for e in 0..n {
                    let ue = self.gather8(&u, e);
                    let s = self.stress_op * ue;
                    let v = (s[0] * s[0] + s[1] * s[1] - s[0] * s[1] + 3.0 * s[2] * s[2])
                        .max(0.0)
                        .sqrt();
                    vm[e] = v;
                    sig[e] = rho_t[e].powf(q) * v;
                    svecs[e] = [s[0], s[1], s[2]];
                }
                let j = pnorm(&sig, p);
                let grad = if want_gradient {
                    let mut g = vec![0.0; n];
                    if j > 0.0 {
                        // adjoint load: dJ/du
                        let mut rhs = vec![0.0; self.system.ndofs];
                        let mut wts = vec![0.0; n];
                        for e in 0..n {
                            let w = (sig[e] / j).powf(p - 1.0);
                            wts[e] = w;
                            if vm[e] <= 1e-30 {
                                continue;
                            }
                            let [sx, sy, txy] = svecs[e];
                            let dvm = nalgebra::Vector3::new(
                                (2.0 * sx - sy) / (2.0 * vm[e]),
                                (2.0 * sy - sx) / (2.0 * vm[e]),
                                3.0 * txy / vm[e],
                            );
                            let row = self.stress_op.transpose() * dvm;
                            let coeff = w * rho_t[e].powf(q);
                            let dofs = self.mesh.element_dofs_elastic(e);
                            for (i, &d) in dofs.iter().enumerate() {
                                rhs[d] += coeff * row[i];
                            }
                        }
                        let lambda = fact.solve(&rhs)?;
                        for e in 0..n {
                            let explicit = wts[e] * q * rho_t[e].powf(q - 1.0) * vm[e];
                            let ue = self.gather8(&u, e);
                            let le = self.gather8(&lambda, e);
                            let dk = pen * rho_t[e].powf(pen - 1.0) * (E0 - E_MIN);
                            g[e] = explicit - dk * (self.ke_elastic * ue).dot(&le);
                        }
                    }
                    Some(g)
                } else {
                    None
                };
                Ok((j, grad, u))
            }
            _ => unreachable!("elastic evaluation on a thermal objective"),
        }
    }

    fn eval_conduction(
        &self,
        rho_t: &[f64],
        want_gradient: bool,
    ) -> Result<(f64, Option<Vec<f64>>, Vec<f64>)> {
        let pen = self.simp_exponent;
        let scale: Vec<f64> = rho_t.iter().map(|&r| K_MIN + r.powf(pen) * (K0 - K_MIN)).collect();
        let fact = fem::factorize_scalar(&self.mesh, &self.ke_scalar, &scale, &self.system)?;
        let t = fact.solve(&self.system.load)?;
        let n = rho_t.len();

        // adjoint helper shared by the aggregated objectives: lambda solves
        // K lambda = dJ/dT, then dJ/drho_e = -lambda_e^T dK_e T_e
        let grad_from_nodal = |rhs: &[f64]| -> Result<Vec<f64>> {
            let lambda = fact.solve(rhs)?;
            let mut g = vec![0.0; n];
            for e in 0..n {
                let te = self.gather4(&t, e);
                let le = self.gather4(&lambda, e);
                let dk = pen * rho_t[e].powf(pen - 1.0) * (K0 - K_MIN);
                g[e] = -dk * (self.ke_scalar * te).dot(&le);
            }
            Ok(g)
        };

        match self.objective.kind {
            ObjectiveKind::ThermalCompliance => {
                let j: f64 = self.system.load.iter().zip(&t).map(|(q, t)| q * t).sum();
                let grad = if want_gradient {
                    // self-adjoint: lambda = T
                    let mut g = vec![0.0; n];
                    for e in 0..n {
                        let te = self.gather4(&t, e);
                        let dk = pen * rho_t[e].powf(pen - 1.0) * (K0 - K_MIN);
                        g[e] = -dk * (self.ke_scalar * te).dot(&te);
                    }
                    Some(g)
                } else {
                    None
                };
                Ok((j, grad, t))
            }
            ObjectiveKind::PNormMaxTemperature => {
                let p = self.objective.p;
                let te: Vec<f64> = (0..n).map(|e| self.element_mean(&t, e)).collect();
                let amp: Vec<f64> = te.iter().map(|v| v.abs()).collect();
                let j = pnorm(&amp, p);
                let grad = if want_gradient {
                    let mut g = vec![0.0; n];
                    if j > 0.0 {
                        let mut rhs = vec![0.0; self.system.ndofs];
                        for e in 0..n {
                            let w = (amp[e] / j).powf(p - 1.0) * te[e].signum() / 4.0;
                            for nd in self.mesh.element_nodes(e) {
                                rhs[nd] += w;
                            }
                        }
                        g = grad_from_nodal(&rhs)?;
                    }
                    Some(g)
                } else {
                    None
                };
                Ok((j, grad, t))
            }
            ObjectiveKind::TemperatureVariance => {
                let te: Vec<f64> = (0..n).map(|e| self.element_mean(&t, e)).collect();
                let (j, dj_dte) = uniform_weight_variance(&te);
                let grad = if want_gradient {
                    let mut rhs = vec![0.0; self.system.ndofs];
                    for e in 0..n {
                        let w = dj_dte[e] / 4.0;
                        for nd in self.mesh.element_nodes(e) {
                            rhs[nd] += w;
                        }
                    }
                    Some(grad_from_nodal(&rhs)?)
                } else {
                    None
                };
                Ok((j, grad, t))
            }
            _ => unreachable!("conduction evaluation on an elastic objective"),
        }
    }

    fn gather8(&self, u: &[f64], e: usize) -> nalgebra::SVector<f64, 8> {
        let dofs = self.mesh.element_dofs_elastic(e);
        nalgebra::SVector::<f64, 8>::from_fn(|i, _| u[dofs[i]])
    }

    fn gather4(&self, t: &[f64], e: usize) -> nalgebra::SVector<f64, 4> {
        let nodes = self.mesh.element_nodes(e);
        nalgebra::SVector::<f64, 4>::from_fn(|i, _| t[nodes[i]])
    }

    fn element_mean(&self, t: &[f64], e: usize) -> f64 {
        let nodes = self.mesh.element_nodes(e);
        nodes.iter().map(|&n| t[n]).sum::<f64>() / 4.0
    }
}

/// `(sum_i v_i^p)^(1/p)` for non-negative values, computed with the maximum
/// factored out so that large exponents cannot overflow.
pub fn pnorm(values: &[f64], p: f64) -> f64 {
    let m = values.iter().fold(0.0f64, |a, &b| a.max(b));
    if m <= 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|&v| (v / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// Weighted variance `sum_e w_e (v_e - mean)^2` with uniform normalized
/// weights `w_e = 1/n` (so the value is the mean squared deviation), and its
/// gradient. Normalized weights keep the value mesh-size independent, which
/// is what makes the fixed clip bound separate healthy designs from
/// divergent void-dominated ones on any mesh. The mean is recomputed from
/// the passed values, including the (analytically zero) sensitivity of the
/// mean itself.
pub fn uniform_weight_variance(values: &[f64]) -> (f64, Vec<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let j: f64 = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let dev_sum: f64 = values.iter().map(|&v| v - mean).sum();
    let grad = values
        .iter()
        .map(|&v| (2.0 * (v - mean) - 2.0 * dev_sum / n) / n)
        .collect();
    (j, grad)
}

/// Benchmark problems addressable by name from configs and the CLI.
pub mod presets {
    use super::*;

    pub const CANTILEVER: &str = "fig1-cantilever-2d";
    pub const HEAT_SINK: &str = "fig12-heatsink";

    /// Width of the centered Dirichlet sink segment, in cells.
    pub const HEAT_SINK_WIDTH: usize = 20;
    /// Uniform heat source applied over the whole domain.
    pub const HEAT_SOURCE: f64 = -0.01;

    pub fn names() -> [&'static str; 2] {
        [CANTILEVER, HEAT_SINK]
    }

    /// Cantilever: left edge fully clamped, unit downward load on the
    /// lower-right corner node.
    pub fn cantilever(
        nelx: usize,
        nely: usize,
        objective: ObjectiveSpec,
        volume_fraction: f64,
        filter_radius: f64,
    ) -> Result<Problem> {
        if objective.kind.physics() != PhysicsKind::PlaneStress {
            return Err(Error::Config(format!(
                "preset {CANTILEVER:?} needs an elastic objective"
            )));
        }
        let mesh = Mesh2D::new(nelx, nely, 1.0)?;
        let mut fixed = Vec::new();
        for iy in 0..=nely {
            let n = mesh.node_id(0, iy);
            fixed.push(2 * n);
            fixed.push(2 * n + 1);
        }
        let tip = mesh.node_id(nelx, 0);
        let bc = BoundaryConditions::Elastic {
            fixed_dofs: fixed,
            point_loads: vec![(2 * tip + 1, -1.0)],
        };
        Problem::new(mesh, objective, bc, volume_fraction, filter_radius)
    }

    /// Square heat sink: uniform source everywhere, temperature pinned to zero
    /// on a 20-cell segment centered on the top edge, all other edges adiabatic.
    pub fn heat_sink(
        l: usize,
        objective: ObjectiveSpec,
        volume_fraction: f64,
        filter_radius: f64,
    ) -> Result<Problem> {
        if objective.kind.physics() != PhysicsKind::Conduction {
            return Err(Error::Config(format!(
                "preset {HEAT_SINK:?} needs a thermal objective"
            )));
        }
        if l < HEAT_SINK_WIDTH {
            return Err(Error::Config(format!(
                "heat sink mesh must be at least {HEAT_SINK_WIDTH} cells wide, got {l}"
            )));
        }
        let mesh = Mesh2D::new(l, l, 1.0)?;
        let start = (l - HEAT_SINK_WIDTH) / 2;
        let sink: Vec<usize> =
            (start..=start + HEAT_SINK_WIDTH).map(|ix| mesh.node_id(ix, l)).collect();
        let bc = BoundaryConditions::Conduction {
            sink_nodes: sink,
            uniform_source: HEAT_SOURCE,
        };
        Problem::new(mesh, objective, bc, volume_fraction, filter_radius)
    }
}
