//! Two-mode bosonic algebra restricted to a fixed total photon number.
//!
//! Basis convention, used everywhere in the crate: index `m` of an amplitude
//! vector or matrix row is the ket `|n - m, m⟩`, i.e. `m` counts the photons
//! in mode b, ascending. `|n, 0⟩` is index 0 and `|0, n⟩` is index `n`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, NoonError, Result};

pub const EXACT_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-10;

/// Pure state in the `n`-photon two-mode subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Builds a state from raw amplitudes; the photon number is `len - 1`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(invalid("amplitude vector must have at least one entry"));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(NoonError::NonFinite("state amplitude".into()));
        }
        Ok(Self { amplitudes })
    }

    pub fn vacuum() -> Self {
        Self {
            amplitudes: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// The Fock ket `|n - m, m⟩`.
    pub fn fock(total_photons: usize, photons_in_b: usize) -> Result<Self> {
        if photons_in_b > total_photons {
            return Err(invalid(format!(
                "mode b occupation {photons_in_b} exceeds total photon number {total_photons}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); total_photons + 1];
        amplitudes[photons_in_b] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn total_photons(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        check_dims(self.total_photons(), other.total_photons())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let w = Complex64::from_polar(1.0, theta);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * w).collect(),
        }
    }

    /// Applies `(â† + e^{iφ} b̂†)` and returns the unnormalized result with
    /// one more photon.
    ///
    /// `â†|n-m, m⟩ = √(n-m+1) |n-m+1, m⟩` keeps index `m`;
    /// `b̂†|n-m, m⟩ = √(m+1) |n-m, m+1⟩` moves to index `m + 1`.
    pub fn apply_creation_factor(&self, phase: f64) -> PureState {
        let n = self.total_photons();
        let w = Complex64::from_polar(1.0, phase);
        let mut out = vec![Complex64::new(0.0, 0.0); n + 2];
        for (m, &c) in self.amplitudes.iter().enumerate() {
            out[m] += c * ((n - m + 1) as f64).sqrt();
            out[m + 1] += w * c * ((m + 1) as f64).sqrt();
        }
        PureState { amplitudes: out }
    }

    /// Rescales to unit norm and returns the squared norm before rescaling.
    pub fn normalize(&self) -> Result<(PureState, f64)> {
        let norm_sqr = self.norm_sqr();
        if !norm_sqr.is_finite() {
            return Err(NoonError::NonFinite("state norm".into()));
        }
        if norm_sqr == 0.0 {
            return Err(NoonError::ZeroNorm);
        }
        let scale = norm_sqr.sqrt().recip();
        let amplitudes = self.amplitudes.iter().map(|a| a * scale).collect();
        Ok((PureState { amplitudes }, norm_sqr))
    }

    /// `|⟨target|self⟩|²`; both states are assumed normalized.
    pub fn fidelity(&self, target: &PureState) -> Result<f64> {
        Ok(target.inner(self)?.norm_sqr())
    }
}

/// `(|N,0⟩ + |0,N⟩)/√2`.
pub fn noon_state(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(invalid("noon state needs at least one photon"));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n + 1];
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amplitudes[0] = a;
    amplitudes[n] = a;
    Ok(PureState { amplitudes })
}

/// Result of applying a sequence of creation factors to the vacuum with
/// renormalization after each factor.
#[derive(Debug, Clone)]
pub struct FactorProduct {
    pub state: PureState,
    /// Natural log of the squared norm the raw product would have had.
    pub log_norm_sqr: f64,
}

/// Applies `∏ₖ (â† + e^{iφₖ} b̂†)` to the vacuum.
///
/// The raw norm grows like `N!`, so the state is renormalized after every
/// factor and the accumulated norm is tracked in log space instead.
pub fn apply_factors(phases: &[f64]) -> Result<FactorProduct> {
    let mut state = PureState::vacuum();
    let mut log_norm_sqr = 0.0;
    for &phase in phases {
        let (next, norm_sqr) = state.apply_creation_factor(phase).normalize()?;
        log_norm_sqr += norm_sqr.ln();
        state = next;
    }
    Ok(FactorProduct {
        state,
        log_norm_sqr,
    })
}

/// Which normalization a density matrix currently obeys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    TraceOne,
    /// The `1/(2·N!)` prefactor of the Gaussian-averaged factor product.
    /// Noon-block diagonal entries are exactly 1/2; the trace exceeds 1 once
    /// the phases are noisy.
    PaperNorm,
}

/// Hermitian operator on the `n`-photon two-mode subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    normalization: Normalization,
}

impl DensityMatrix {
    /// Validated constructor: checks shape, Hermiticity, positivity and, for
    /// [`Normalization::TraceOne`], the trace.
    pub fn new(matrix: DMatrix<Complex64>, normalization: Normalization) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(invalid(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let rho = Self {
            matrix,
            normalization,
        };
        rho.check_invariants()?;
        Ok(rho)
    }

    pub(crate) fn from_parts(matrix: DMatrix<Complex64>, normalization: Normalization) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self {
            matrix,
            normalization,
        }
    }

    pub fn total_photons(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest entry of `|M − M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if !herm.is_finite() || herm > EXACT_TOL {
            return Err(NoonError::InvariantViolation(format!(
                "not Hermitian: max |M - M†| = {herm:e}"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -EIGEN_TOL {
            return Err(NoonError::InvariantViolation(format!(
                "not positive semidefinite: smallest eigenvalue {min_eig:e}"
            )));
        }
        if self.normalization == Normalization::TraceOne {
            let tr = self.trace();
            if (tr - Complex64::new(1.0, 0.0)).norm() > EIGEN_TOL {
                return Err(NoonError::InvariantViolation(format!(
                    "trace-one matrix has trace {tr}"
                )));
            }
        }
        Ok(())
    }

    /// `|ψ⟩⟨ψ|` for a normalized pure state.
    pub fn outer_product(state: &PureState) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| a[i] * a[j].conj());
        Self {
            matrix,
            normalization: Normalization::TraceOne,
        }
    }

    /// Convex combination `Σ wᵢ ρᵢ`. Weights must be nonnegative and sum to 1.
    pub fn mix(components: &[(f64, DensityMatrix)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| invalid("mix needs at least one component"))?;
        let n = first.total_photons();
        let mut total = 0.0;
        let mut matrix = DMatrix::zeros(n + 1, n + 1);
        for (w, rho) in components {
            check_dims(n, rho.total_photons())?;
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(invalid(format!(
                    "mixture weight {w} is not a nonnegative number"
                )));
            }
            if rho.normalization != Normalization::TraceOne {
                return Err(NoonError::NotTraceOne);
            }
            total += w;
            matrix += &rho.matrix * Complex64::new(*w, 0.0);
        }
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(invalid(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            matrix,
            normalization: Normalization::TraceOne,
        })
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, operator: &DMatrix<Complex64>) -> Result<Complex64> {
        if operator.nrows() != self.matrix.nrows() || operator.ncols() != self.matrix.ncols() {
            return Err(NoonError::DimensionMismatch {
                expected: self.total_photons(),
                found: operator.nrows().saturating_sub(1),
            });
        }
        Ok(trace_of_product(&self.matrix, operator))
    }

    /// `⟨target|ρ|target⟩`; requires a trace-one matrix.
    pub fn fidelity(&self, target: &PureState) -> Result<f64> {
        check_dims(self.total_photons(), target.total_photons())?;
        if self.normalization != Normalization::TraceOne {
            return Err(NoonError::NotTraceOne);
        }
        let b = target.amplitudes();
        let rb = &self.matrix * nalgebra::DVector::from_column_slice(b);
        let value: Complex64 = b.iter().zip(rb.iter()).map(|(x, y)| x.conj() * y).sum();
        Ok(value.re)
    }

    /// Rescales by the trace.
    pub fn to_trace_one(&self) -> Result<Self> {
        let tr = self.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(NoonError::NonFinite(format!("trace {tr}")));
        }
        Ok(Self {
            matrix: &self.matrix / Complex64::new(tr, 0.0),
            normalization: Normalization::TraceOne,
        })
    }
}

/// `tr(A B)` without forming the product.
pub(crate) fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Anything that can report its fidelity with a pure target.
pub trait Fidelity {
    fn fidelity_with(&self, target: &PureState) -> Result<f64>;
}

impl Fidelity for PureState {
    fn fidelity_with(&self, target: &PureState) -> Result<f64> {
        self.fidelity(target)
    }
}

impl Fidelity for DensityMatrix {
    fn fidelity_with(&self, target: &PureState) -> Result<f64> {
        self.fidelity(target)
    }
}

pub fn fidelity<S: Fidelity + ?Sized>(state: &S, target: &PureState) -> Result<f64> {
    state.fidelity_with(target)
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(NoonError::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn noon_state_amplitudes() {
        let one = noon_state(1).unwrap();
        assert_eq!(
            one.amplitudes(),
            &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]
        );

        let two = noon_state(2).unwrap();
        assert_eq!(
            two.amplitudes(),
            &[c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)]
        );

        let five = noon_state(5).unwrap();
        assert_abs_diff_eq!(five.norm_sqr(), 1.0, epsilon = EXACT_TOL);
        assert_eq!(
            five.amplitudes().iter().filter(|a| a.norm() > 0.0).count(),
            2
        );
    }

    #[test]
    fn noon_state_rejects_zero() {
        assert!(matches!(noon_state(0), Err(NoonError::InvalidArgument(_))));
    }

    #[test]
    fn single_factor_on_vacuum() {
        let phi = 0.7;
        let (s, norm_sqr) = PureState::vacuum()
            .apply_creation_factor(phi)
            .normalize()
            .unwrap();
        assert_abs_diff_eq!(norm_sqr, 2.0, epsilon = EXACT_TOL);
        let expected = PureState::from_amplitudes(vec![
            c(FRAC_1_SQRT_2, 0.0),
            Complex64::from_polar(FRAC_1_SQRT_2, phi),
        ])
        .unwrap();
        assert_abs_diff_eq!(s.fidelity(&expected).unwrap(), 1.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(
            (s.amplitudes()[1] - expected.amplitudes()[1]).norm(),
            0.0,
            epsilon = EXACT_TOL
        );
    }

    #[test]
    fn two_roots_of_unity_give_minus_noon() {
        let product = apply_factors(&[0.0, PI]).unwrap();
        let minus = PureState::from_amplitudes(vec![
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(-FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(
            product.state.fidelity(&minus).unwrap(),
            1.0,
            epsilon = EXACT_TOL
        );
        // Raw norm of â†² − b̂†² on vacuum is 2·2!.
        assert_abs_diff_eq!(product.log_norm_sqr.exp(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn cube_roots_of_unity_give_noon_three() {
        // ∏(x + ωᵏ y) = x³ + y³: the middle elementary symmetric polynomials vanish.
        let product = apply_factors(&[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]).unwrap();
        let f = product.state.fidelity(&noon_state(3).unwrap()).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = EXACT_TOL);
    }

    #[test]
    fn fidelity_examples() {
        let noon4 = noon_state(4).unwrap();
        assert_abs_diff_eq!(fidelity(&noon4, &noon4).unwrap(), 1.0, epsilon = EXACT_TOL);
        let branch = PureState::fock(4, 0).unwrap();
        assert_abs_diff_eq!(fidelity(&branch, &noon4).unwrap(), 0.5, epsilon = EXACT_TOL);
        for theta in [0.3, 1.0, 2.5, -4.0] {
            let shifted = noon4.with_global_phase(theta);
            assert_abs_diff_eq!(
                fidelity(&shifted, &noon4).unwrap(),
                1.0,
                epsilon = EXACT_TOL
            );
        }
        let rho = DensityMatrix::outer_product(&branch);
        assert_abs_diff_eq!(fidelity(&rho, &noon4).unwrap(), 0.5, epsilon = EXACT_TOL);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let err = fidelity(&noon_state(3).unwrap(), &noon_state(4).unwrap()).unwrap_err();
        assert_eq!(
            err,
            NoonError::DimensionMismatch {
                expected: 4,
                found: 3
            }
        );
        let rho = DensityMatrix::outer_product(&noon_state(2).unwrap());
        assert!(matches!(
            rho.fidelity(&noon_state(3).unwrap()),
            Err(NoonError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn outer_product_of_noon_two() {
        let rho = DensityMatrix::outer_product(&noon_state(2).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let expected = if (i == 0 || i == 2) && (j == 0 || j == 2) {
                    0.5
                } else {
                    0.0
                };
                assert_abs_diff_eq!(rho.entry(i, j).re, expected, epsilon = EXACT_TOL);
                assert_abs_diff_eq!(rho.entry(i, j).im, 0.0, epsilon = EXACT_TOL);
            }
        }
        rho.check_invariants().unwrap();
    }

    #[test]
    fn mix_identity_and_errors() {
        let rho = DensityMatrix::outer_product(&noon_state(3).unwrap());
        let mixed = DensityMatrix::mix(&[(1.0, rho.clone())]).unwrap();
        assert_eq!(mixed, rho);

        let other = DensityMatrix::outer_product(&noon_state(2).unwrap());
        assert!(matches!(
            DensityMatrix::mix(&[(0.5, rho.clone()), (0.5, other)]),
            Err(NoonError::DimensionMismatch { .. })
        ));
        assert!(DensityMatrix::mix(&[(0.7, rho.clone())]).is_err());
        assert!(DensityMatrix::mix(&[(-0.5, rho.clone()), (1.5, rho)]).is_err());
    }

    #[test]
    fn sigma_expectation_on_noon_is_one() {
        for n in 1..=6 {
            let mut sigma = DMatrix::zeros(n + 1, n + 1);
            sigma[(0, n)] = c(1.0, 0.0);
            sigma[(n, 0)] = c(1.0, 0.0);
            let rho = DensityMatrix::outer_product(&noon_state(n).unwrap());
            let value = rho.expectation(&sigma).unwrap();
            assert_abs_diff_eq!(value.re, 1.0, epsilon = EXACT_TOL);
            assert_abs_diff_eq!(value.im, 0.0, epsilon = EXACT_TOL);
        }
        let rho = DensityMatrix::outer_product(&noon_state(2).unwrap());
        assert!(rho.expectation(&DMatrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn validated_constructor_rejects_bad_matrices() {
        let not_herm =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(not_herm, Normalization::TraceOne).is_err());
        let negative =
            DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(negative, Normalization::TraceOne).is_err());
        let big_trace =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(DensityMatrix::new(big_trace.clone(), Normalization::TraceOne).is_err());
        assert!(DensityMatrix::new(big_trace, Normalization::PaperNorm).is_ok());
    }

    #[test]
    fn normalize_zero_state_fails() {
        let zero = PureState::from_amplitudes(vec![c(0.0, 0.0); 3]).unwrap();
        assert_eq!(zero.normalize().unwrap_err(), NoonError::ZeroNorm);
    }

    #[test]
    fn large_products_stay_finite() {
        let n = 1000;
        let phases: Vec<f64> = (0..n).map(|k| 0.37 * k as f64).collect();
        let product = apply_factors(&phases).unwrap();
        assert_eq!(product.state.total_photons(), n);
        assert!(product.log_norm_sqr.is_finite());
        assert_abs_diff_eq!(product.state.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    fn arb_state(max_n: usize) -> impl Strategy<Value = PureState> {
        (0..=max_n).prop_flat_map(|n| {
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n + 1).prop_map(|v| {
                PureState::from_amplitudes(v.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn creation_factor_is_linear(
            (a, b) in (0usize..8).prop_flat_map(|n| {
                let v = prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n + 1);
                (v.clone(), v)
            }),
            alpha in (-2.0..2.0f64, -2.0..2.0f64),
            beta in (-2.0..2.0f64, -2.0..2.0f64),
            phase in -7.0..7.0f64,
        ) {
            let to_state = |v: Vec<(f64, f64)>| {
                PureState::from_amplitudes(v.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap()
            };
            let (sa, sb) = (to_state(a), to_state(b));
            let (alpha, beta) = (c(alpha.0, alpha.1), c(beta.0, beta.1));
            let combined = PureState::from_amplitudes(
                sa.amplitudes().iter().zip(sb.amplitudes()).map(|(x, y)| alpha * x + beta * y).collect(),
            ).unwrap();
            let lhs = combined.apply_creation_factor(phase);
            let fa = sa.apply_creation_factor(phase);
            let fb = sb.apply_creation_factor(phase);
            for m in 0..lhs.amplitudes().len() {
                let rhs = alpha * fa.amplitudes()[m] + beta * fb.amplitudes()[m];
                prop_assert!((lhs.amplitudes()[m] - rhs).norm() <= 1e-12);
            }
        }

        #[test]
        fn factors_on_vacuum_have_positive_norm(phases in prop::collection::vec(-7.0..7.0f64, 1..25)) {
            let mut state = PureState::vacuum();
            for &p in &phases {
                let raw = state.apply_creation_factor(p);
                prop_assert!(raw.norm_sqr() > 0.0);
                state = raw.normalize().unwrap().0;
            }
            prop_assert_eq!(state.total_photons(), phases.len());
        }

        #[test]
        fn outer_products_are_valid_density_matrices(state in arb_state(12)) {
            prop_assume!(state.norm_sqr() > 1e-6);
            let (s, _) = state.normalize().unwrap();
            let rho = DensityMatrix::outer_product(&s);
            prop_assert!(rho.check_invariants().is_ok());
        }
    }
}
