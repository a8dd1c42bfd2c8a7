//! CHSH correlators for two qubits and a two-stage measurement protocol that
//! reads the local rotation, and hence the shift, off optimal settings.
//!
//! Conventions: Q is the Bloch-vector rotation of U, (Qm)·σ = U(m·σ)U†, so a
//! Bob axis m on ρ_0 corresponds to Qm on ρ_f and β^f = βQᵀ.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bloch::{expect_product, BipartiteState};
use crate::cyclic::{adjoint_action, final_state, CyclicUnitary};
use crate::error::{Error, Result};
use crate::linalg::{pauli, pauli_dot, ComplexMatrix};
use crate::real::{
    add3, cross3, det3, dot3, mat3_mul, mat3_transpose, mat3_vec, norm3, normalize3,
    orthogonality_error, scale3, sub3, triad, RealMatrix, Vec3,
};
use crate::scalar::{Real, Tolerances};
use crate::states::item_rng;

type Mat3<T> = [[T; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MeasurementSettings<T> {
    pub n1: Vec3<T>,
    pub n2: Vec3<T>,
    pub m1: Vec3<T>,
    pub m2: Vec3<T>,
}

impl<T: Real> MeasurementSettings<T> {
    /// Fails unless all four axes are unit vectors.
    pub fn new(n1: Vec3<T>, n2: Vec3<T>, m1: Vec3<T>, m2: Vec3<T>) -> Result<Self> {
        let tol = T::default_tolerances()
            .normalization
            .max(T::epsilon() * T::lit(16.0));
        for (name, v) in [("n1", &n1), ("n2", &n2), ("m1", &m1), ("m2", &m2)] {
            if (norm3(v) - T::one()).abs() > tol {
                return Err(Error::InvalidInput(format!("{name} is not a unit vector")));
            }
        }
        Ok(Self { n1, n2, m1, m2 })
    }

    /// Normalizes each axis; fails on a zero vector.
    pub fn normalized(n1: Vec3<T>, n2: Vec3<T>, m1: Vec3<T>, m2: Vec3<T>) -> Result<Self> {
        let unit =
            |v: &Vec3<T>| normalize3(v).ok_or_else(|| Error::InvalidInput("zero axis".into()));
        Ok(Self {
            n1: unit(&n1)?,
            n2: unit(&n2)?,
            m1: unit(&m1)?,
            m2: unit(&m2)?,
        })
    }

    /// Bob's axes carried through the Bloch rotation `q`.
    pub fn rotate_bob(&self, q: &Mat3<T>) -> Self {
        Self {
            m1: mat3_vec(q, &self.m1),
            m2: mat3_vec(q, &self.m2),
            ..*self
        }
    }
}

/// T_ij = (n1+n2)_i m1_j + (n1−n2)_i m2_j
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MeasurementMatrix<T: Real> {
    pub t: RealMatrix<T>,
}

impl<T: Real> MeasurementMatrix<T> {
    pub fn from_settings(s: &MeasurementSettings<T>) -> Self {
        let plus = add3(&s.n1, &s.n2);
        let minus = sub3(&s.n1, &s.n2);
        Self {
            t: RealMatrix::from_fn(3, 3, |i, j| plus[i] * s.m1[j] + minus[i] * s.m2[j]),
        }
    }
}

fn require_qubits<T: Real>(state: &BipartiteState<T>) -> Result<()> {
    if state.dims() != (2, 2) {
        return Err(Error::Domain(format!(
            "CHSH needs two qubits, got {:?}",
            state.dims()
        )));
    }
    Ok(())
}

/// E(n·σ, m·σ) = Tr(ρ (n·σ)⊗(m·σ))
pub fn correlator<T: Real>(state: &BipartiteState<T>, n: &Vec3<T>, m: &Vec3<T>) -> Result<T> {
    require_qubits(state)?;
    Ok(expect_product(state.rho(), &pauli_dot(n), &pauli_dot(m)))
}

/// The nine correlators E(σ_i, σ_j); equal to β for two qubits.
pub fn correlation_tensor<T: Real>(state: &BipartiteState<T>) -> Result<Mat3<T>> {
    require_qubits(state)?;
    let s = pauli::<T>();
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = expect_product(state.rho(), &s[i], &s[j]);
        }
    }
    Ok(out)
}

/// F = E(A1,B1) + E(A1,B2) + E(A2,B1) − E(A2,B2), from the density matrix.
#[allow(non_snake_case)]
pub fn expectation_F<T: Real>(state: &BipartiteState<T>, s: &MeasurementSettings<T>) -> Result<T> {
    Ok(correlator(state, &s.n1, &s.m1)?
        + correlator(state, &s.n1, &s.m2)?
        + correlator(state, &s.n2, &s.m1)?
        - correlator(state, &s.n2, &s.m2)?)
}

/// F = Σ β_ij T_ij
#[allow(non_snake_case)]
pub fn F_from_beta<T: Real>(beta: &RealMatrix<T>, s: &MeasurementSettings<T>) -> T {
    beta.dot(&MeasurementMatrix::from_settings(s).t)
}

/// Coefficients of U σ_i U† for U = exp(iφ/2 u·σ):
/// σ_i^f = Σ_k R_ik σ_k with
/// R_ik = cos φ δ_ik + sin φ ε_ijk u_j + 2 sin²(φ/2) u_i u_k.
pub fn pauli_conjugate<T: Real>(u: &Vec3<T>, phi: T) -> Result<Mat3<T>> {
    if (norm3(u) - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
        return Err(Error::InvalidInput(
            "rotation axis must be a unit vector".into(),
        ));
    }
    let (c, s) = (phi.cos(), phi.sin());
    let h = (phi / T::lit(2.0)).sin();
    let w = T::lit(2.0) * h * h;
    let mut r = [[T::zero(); 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = w * u[i] * u[k];
            if i == k {
                *v += c;
            }
        }
    }
    // ε_ijk u_j: the cross-product matrix
    r[0][1] -= s * u[2];
    r[0][2] += s * u[1];
    r[1][2] -= s * u[0];
    r[1][0] += s * u[2];
    r[2][0] -= s * u[1];
    r[2][1] += s * u[0];
    Ok(r)
}

/// Q with (Qm)·σ = U(m·σ)U†, for any 2×2 unitary.
pub fn bloch_rotation<T: Real>(u: &ComplexMatrix<T>) -> Result<Mat3<T>> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::InvalidDimension("expected a 2x2 unitary".into()));
    }
    let basis = crate::linalg::gell_mann_basis::<T>(2)?;
    Ok(adjoint_action(u, &basis).to_mat3())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOptions<T> {
    /// Random starts per settings optimization.
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Relative size below which β(n1 ± n2) counts as vanishing.
    pub ambiguity: T,
    pub tolerances: Tolerances<T>,
}

impl<T: Real> Default for ProtocolOptions<T> {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 2000,
            seed: 0xc45,
            ambiguity: T::lit(1e-6),
            tolerances: Tolerances::default(),
        }
    }
}

fn random_axis<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Vec3<T> {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if let Some(u) = normalize3(&[T::lit(v[0]), T::lit(v[1]), T::lit(v[2])]) {
            return u;
        }
    }
}

fn tangent<T: Real, const K: usize>(x: &[Vec3<T>; K], g: &[Vec3<T>; K]) -> ([Vec3<T>; K], T) {
    let t: [Vec3<T>; K] = std::array::from_fn(|k| sub3(&g[k], &scale3(&x[k], dot3(&g[k], &x[k]))));
    let g2 = t.iter().map(|v| dot3(v, v)).sum();
    (t, g2)
}

/// Projected gradient ascent of a smooth function of K unit vectors, from
/// `restarts` random starts. Returns the best point and value.
///
/// Once the gain per step drops below rounding, a step is still taken when
/// it does not lose value and it shrinks the tangent gradient; this drives
/// the axes to full precision rather than to √ε.
fn ascend_spheres<T: Real, const K: usize>(
    f: impl Fn(&[Vec3<T>; K]) -> T,
    grad: impl Fn(&[Vec3<T>; K]) -> [Vec3<T>; K],
    opts: &ProtocolOptions<T>,
    stream: u64,
) -> Result<[Vec3<T>; K]> {
    if opts.restarts == 0 {
        return Err(Error::InvalidInput("restarts must be >= 1".into()));
    }
    let armijo = T::lit(1e-4);
    let mut best: Option<([Vec3<T>; K], T)> = None;
    for r in 0..opts.restarts {
        let mut rng = item_rng(opts.seed ^ stream.rotate_left(32), r as u64);
        let mut x: [Vec3<T>; K] = std::array::from_fn(|_| random_axis(&mut rng));
        let mut fx = f(&x);
        let mut step = T::one();
        for _ in 0..opts.max_iters {
            let g = grad(&x);
            let (dir, g2) = tangent(&x, &g);
            let scale: T = g.iter().map(|v| dot3(v, v)).sum::<T>().sqrt().max(T::one());
            if g2.sqrt() <= T::epsilon() * T::lit(8.0) * scale {
                break;
            }
            let slack = T::epsilon() * T::lit(8.0) * fx.abs().max(T::one());
            let mut t = step;
            let mut moved = None;
            for _ in 0..60 {
                let trial: [Vec3<T>; K] = std::array::from_fn(|k| {
                    normalize3(&add3(&x[k], &scale3(&dir[k], t))).unwrap_or(x[k])
                });
                let ft = f(&trial);
                let flat = ft >= fx - slack && tangent(&trial, &grad(&trial)).1 < g2 * T::lit(0.25);
                let gain = ft - fx;
                if (gain > T::zero() && gain >= armijo * t * g2) || flat {
                    moved = Some((trial, ft));
                    break;
                }
                t *= T::lit(0.5);
            }
            let Some((trial, ft)) = moved else { break };
            x = trial;
            fx = ft.max(fx);
            step = (t * T::lit(2.0)).min(T::lit(1e6));
        }
        if best.as_ref().is_none_or(|(_, fb)| fx > *fb) {
            best = Some((x, fx));
        }
    }
    Ok(best.expect("at least one restart").0)
}

fn grad_alice<T: Real>(beta: &Mat3<T>, m1: &Vec3<T>, m2: &Vec3<T>) -> [Vec3<T>; 2] {
    [mat3_vec(beta, &add3(m1, m2)), mat3_vec(beta, &sub3(m1, m2))]
}

fn grad_bob<T: Real>(beta: &Mat3<T>, n1: &Vec3<T>, n2: &Vec3<T>) -> [Vec3<T>; 2] {
    let bt = mat3_transpose(beta);
    [mat3_vec(&bt, &add3(n1, n2)), mat3_vec(&bt, &sub3(n1, n2))]
}

/// F from the nine measured correlators.
fn contract<T: Real>(beta: &Mat3<T>, s: &MeasurementSettings<T>) -> T {
    F_from_beta(&RealMatrix::from_mat3(beta), s)
}

/// Best Alice axes for fixed Bob axes.
pub fn maximize_alice<T: Real>(
    state: &BipartiteState<T>,
    m1: &Vec3<T>,
    m2: &Vec3<T>,
    opts: &ProtocolOptions<T>,
) -> Result<(MeasurementSettings<T>, T)> {
    let beta = correlation_tensor(state)?;
    let at = |x: &[Vec3<T>; 2]| MeasurementSettings {
        n1: x[0],
        n2: x[1],
        m1: *m1,
        m2: *m2,
    };
    let g = grad_alice(&beta, m1, m2);
    let x = ascend_spheres(|x| contract(&beta, &at(x)), |_| g, opts, 1)?;
    let s = at(&x);
    Ok((s, expectation_F(state, &s)?))
}

/// Best Bob axes for fixed Alice axes.
pub fn maximize_bob<T: Real>(
    state: &BipartiteState<T>,
    n1: &Vec3<T>,
    n2: &Vec3<T>,
    opts: &ProtocolOptions<T>,
) -> Result<(MeasurementSettings<T>, T)> {
    let beta = correlation_tensor(state)?;
    let at = |x: &[Vec3<T>; 2]| MeasurementSettings {
        n1: *n1,
        n2: *n2,
        m1: x[0],
        m2: x[1],
    };
    let g = grad_bob(&beta, n1, n2);
    let x = ascend_spheres(|x| contract(&beta, &at(x)), |_| g, opts, 2)?;
    let s = at(&x);
    Ok((s, expectation_F(state, &s)?))
}

/// Maximal F over all four axes.
pub fn maximize_chsh<T: Real>(
    state: &BipartiteState<T>,
    opts: &ProtocolOptions<T>,
) -> Result<(MeasurementSettings<T>, T)> {
    let beta = correlation_tensor(state)?;
    let at = |x: &[Vec3<T>; 4]| MeasurementSettings {
        n1: x[0],
        n2: x[1],
        m1: x[2],
        m2: x[3],
    };
    let x = ascend_spheres(
        |x| contract(&beta, &at(x)),
        |x| {
            let [a1, a2] = grad_alice(&beta, &x[2], &x[3]);
            let [b1, b2] = grad_bob(&beta, &x[0], &x[1]);
            [a1, a2, b1, b2]
        },
        opts,
        3,
    )?;
    let s = at(&x);
    Ok((s, expectation_F(state, &s)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Stage1<T> {
    /// Optimal Alice axes with Bob fixed at x̂, ŷ.
    pub settings: MeasurementSettings<T>,
    pub f_max: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Reference<T> {
    /// Optimal Bob axes on ρ_0 for the stage-1 Alice axes.
    pub settings: MeasurementSettings<T>,
    pub f: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Stage2<T> {
    /// Optimal Bob axes on ρ_f for the stage-1 Alice axes.
    pub settings: MeasurementSettings<T>,
    pub f_optimal: T,
    /// Stage-1 settings with Bob's axes carried through the recovered rotation.
    pub mapped_settings: MeasurementSettings<T>,
    /// F on ρ_f at the mapped settings; equals stage 1's F_max.
    pub f_mapped: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ChshTranscript<T: Real> {
    pub stage1: Stage1<T>,
    pub reference: Reference<T>,
    pub stage2: Stage2<T>,
    /// Bloch rotation Q of Bob's operation, β^f = βQᵀ.
    pub recovered_rotation: RealMatrix<T>,
    pub recovered_beta_f: RealMatrix<T>,
    pub estimated_d: T,
}

pub fn protocol_run<T: Real>(
    state: &BipartiteState<T>,
    u: &CyclicUnitary<T>,
) -> Result<ChshTranscript<T>> {
    protocol_run_with(state, u, &ProtocolOptions::default())
}

/// Recovers Bob's rotation from settings optimizations alone.
///
/// Stage 1 fixes Bob at x̂, ŷ and optimizes Alice on ρ_0. With Alice held
/// there, Bob's optimal axes are along βᵀ(n1 ± n2) on ρ_0 and along
/// Qβᵀ(n1 ± n2) on ρ_f; the two frames they span fix Q.
pub fn protocol_run_with<T: Real>(
    state: &BipartiteState<T>,
    u: &CyclicUnitary<T>,
    opts: &ProtocolOptions<T>,
) -> Result<ChshTranscript<T>> {
    require_qubits(state)?;
    let rho_f = final_state(state, u)?;
    let (x, y) = (
        [T::one(), T::zero(), T::zero()],
        [T::zero(), T::one(), T::zero()],
    );
    let (s1, f_max) = maximize_alice(state, &x, &y, opts)?;
    let (reference, f_ref) = maximize_bob(state, &s1.n1, &s1.n2, opts)?;
    let (observed, f_opt) = maximize_bob(&rho_f, &s1.n1, &s1.n2, opts)?;

    let beta = correlation_tensor(state)?;
    let [p, q] = grad_bob(&beta, &s1.n1, &s1.n2);
    let beta_norm = RealMatrix::from_mat3(&beta).frobenius_norm();
    let floor = opts.ambiguity * beta_norm;
    if beta_norm.is_zero() || norm3(&p) <= floor || norm3(&q) <= floor {
        return Err(Error::AmbiguousRecovery(format!(
            "Bob's optimum is flat: |β(n1+n2)| = {}, |β(n1-n2)| = {}",
            norm3(&p),
            norm3(&q)
        )));
    }
    let sine = norm3(&cross3(&reference.m1, &reference.m2));
    if sine <= opts.ambiguity {
        return Err(Error::AmbiguousRecovery(format!(
            "optimal Bob axes are parallel (|m1 × m2| = {:e}); the rotation is fixed only up to that axis",
            sine.to_f64()
        )));
    }
    let frame_ref = triad(&reference.m1, &reference.m2).expect("independent axes");
    let frame_obs = triad(&observed.m1, &observed.m2).ok_or_else(|| {
        Error::InternalConsistency("optimal axes on the final state are parallel".into())
    })?;
    let rot = mat3_mul(&frame_obs, &mat3_transpose(&frame_ref));
    let tol = &opts.tolerances;
    let check = T::lit(1e-8).max(tol.cross_check);
    if orthogonality_error(&rot) > check || (det3(&rot) - T::one()).abs() > check {
        return Err(Error::InternalConsistency(
            "recovered map is not a proper rotation".into(),
        ));
    }

    let beta_m = RealMatrix::from_mat3(&beta);
    let rot_m = RealMatrix::from_mat3(&rot);
    let beta_f = &beta_m * &rot_m.transpose();
    // two qubits: (N_A−1)(N_B−1)/(N_A N_B) = 1/4
    let estimated_d = (beta_m.sub(&beta_f).frobenius_norm_sqr() / T::lit(8.0)).sqrt();

    let mapped = s1.rotate_bob(&rot);
    let f_mapped = expectation_F(&rho_f, &mapped)?;
    Ok(ChshTranscript {
        stage1: Stage1 {
            settings: s1,
            f_max,
        },
        reference: Reference {
            settings: reference,
            f: f_ref,
        },
        stage2: Stage2 {
            settings: observed,
            f_optimal: f_opt,
            mapped_settings: mapped,
            f_mapped,
        },
        recovered_rotation: rot_m,
        recovered_beta_f: beta_f,
        estimated_d,
    })
}
