//! Finite Fourier discretization of the classical static KMS condition on T².
//!
//! Unknown: a band-limited density `ρ = Σ_m ρ_m e^{im·θ}` for `μ₀ = ∫ ρ · Ω`.
//! Each unordered pair of distinct test modes `(e_k, e_l)` gives one linear
//! constraint `∫ ρ h = (2π)² Σ_m ρ_m h_{−m} = 0`, where
//! `h = {e_k, e_l} − β e_l L_X e_k`. The rows are assembled exactly. Columns
//! are the density modes that some row can reach. The matrix splits into
//! independent blocks (connected components of the row/column incidence
//! graph), and each block gets a floating-point SVD.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::backends::fourier::{Fourier, WaveVector};
use crate::backends::{lie_derivative, poisson_bracket, VectorFieldSpec};
use crate::error::{KmsError, KmsResult};
use crate::scalar::{GaussRat, Scalar};
use crate::series::Coefficient;

/// One constraint: the test pair and its sparse entries by density mode.
#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub pair: (WaveVector, WaveVector),
    pub entries: BTreeMap<WaveVector, GaussRat>,
}

#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub n_test: i32,
    pub n_mu: i32,
    pub beta: BigRational,
    pub rows: Vec<ConstraintRow>,
    /// Density modes, in ascending order; column j is `columns[j]`.
    pub columns: Vec<WaveVector>,
    /// Row entries beyond the density band (they pair with zero).
    pub dropped_entries: usize,
}

fn test_modes(n: i32) -> Vec<WaveVector> {
    (-n..=n).flat_map(|a| (-n..=n).map(move |b| (a, b))).collect()
}

/// Builds the constraint rows for the test cutoff `n_test` and density cutoff
/// `n_mu ≥ 2 n_test`. The density is band-limited, so row entries beyond
/// `n_mu` (from the spectral width of α) pair with zero and are dropped
/// exactly; their count is kept as a diagnostic. Columns are the in-band
/// modes `−(k+l) − j` that some pair `k ≠ l` can reach, with `j = 0` or (for
/// β ≠ 0) a mode of α. A mode no pair can reach carries no information and is
/// left out rather than reported as a spurious free direction.
pub fn assemble_constraints(
    n_test: i32,
    n_mu: i32,
    beta: &BigRational,
    x: &VectorFieldSpec<Fourier<GaussRat>>,
) -> KmsResult<ConstraintSystem> {
    if n_test < 1 || n_mu < 2 * n_test {
        return Err(KmsError::Precondition(format!("need N_μ ≥ 2·N_test ≥ 2, got N_test = {n_test}, N_μ = {n_mu}")));
    }
    let width = x.one_form().iter().map(Fourier::spectral_width).max().unwrap_or(0);
    // wide enough that nothing is lost while building rows
    let band = 2 * n_test + width + 1;
    let x = match x {
        VectorFieldSpec::Hamiltonian(h) => VectorFieldSpec::Hamiltonian(h.with_band(band)),
        VectorFieldSpec::ClosedOneForm(a) => VectorFieldSpec::ClosedOneForm(a.iter().map(|c| c.with_band(band)).collect()),
    };
    let beta_s = GaussRat::from_rational(beta, &BigRational::from_integer(0.into()));
    let modes = test_modes(n_test);
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    let mut dropped = 0;
    let mut shifts = vec![(0, 0)];
    if !beta.is_zero() {
        for c in x.one_form() {
            shifts.extend(c.modes().map(|(k, _)| *k));
        }
    }
    for (i, &k) in modes.iter().enumerate() {
        let f = Fourier::mode(band, k, GaussRat::one());
        let lf = lie_derivative(&x, &f)?;
        for &l in &modes[i + 1..] {
            let g = Fourier::mode(band, l, GaussRat::one());
            let h = poisson_bracket(&f, &g).sub(&g.mul(&lf).scale(&beta_s));
            debug_assert_eq!(h.leakage(), 0.0);
            let mut entries = BTreeMap::new();
            for (m, c) in h.modes() {
                let col = (-m.0, -m.1);
                if col.0.abs() > n_mu || col.1.abs() > n_mu {
                    dropped += 1;
                    continue;
                }
                entries.insert(col, c.clone());
            }
            for j in &shifts {
                let col = (-(k.0 + l.0 + j.0), -(k.1 + l.1 + j.1));
                if col.0.abs() <= n_mu && col.1.abs() <= n_mu {
                    seen.insert(col);
                }
            }
            rows.push(ConstraintRow { pair: (k, l), entries });
        }
    }
    Ok(ConstraintSystem { n_test, n_mu, beta: beta.clone(), rows, columns: seen.into_iter().collect(), dropped_entries: dropped })
}

impl ConstraintSystem {
    pub fn dense(&self) -> DMatrix<Complex64> {
        let index: BTreeMap<WaveVector, usize> = self.columns.iter().enumerate().map(|(j, m)| (*m, j)).collect();
        let mut a = DMatrix::zeros(self.rows.len(), self.columns.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (m, c) in &row.entries {
                a[(i, index[m])] = c.to_c64();
            }
        }
        a
    }

    /// Column groups that never share a row.
    fn blocks(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let index: BTreeMap<WaveVector, usize> = self.columns.iter().enumerate().map(|(j, m)| (*m, j)).collect();
        let mut parent: Vec<usize> = (0..self.columns.len()).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for row in &self.rows {
            let cols: Vec<usize> = row.entries.keys().map(|m| index[m]).collect();
            for w in cols.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for j in 0..self.columns.len() {
            let root = find(&mut parent, j);
            groups.entry(root).or_default().1.push(j);
        }
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(m) = row.entries.keys().next() {
                let root = find(&mut parent, index[m]);
                groups.get_mut(&root).expect("column group").0.push(i);
            }
        }
        groups.into_values().collect()
    }
}

#[derive(Debug, Clone)]
pub struct NullspaceResult {
    pub dimension: usize,
    /// All singular values, descending (one per column).
    pub spectrum: Vec<f64>,
    /// Smallest retained over largest discarded singular value.
    pub gap_ratio: f64,
    /// Right singular vectors of the discarded values, indexed like `columns`.
    pub null_vectors: Vec<Vec<Complex64>>,
    pub columns: Vec<WaveVector>,
}

impl NullspaceResult {
    /// The first null vector as a density on T².
    pub fn null_density(&self, band: i32) -> Option<Fourier<Complex64>> {
        self.null_vectors
            .first()
            .map(|v| Fourier::from_modes(band, self.columns.iter().copied().zip(v.iter().copied())))
    }
}

/// Numerical nullity: singular values below `rel_tol · σ_max` count as zero.
pub fn nullspace_dim(cs: &ConstraintSystem, rel_tol: f64) -> KmsResult<NullspaceResult> {
    if cs.columns.is_empty() {
        return Err(KmsError::Precondition("empty constraint system".into()));
    }
    // (σ, column indices, right singular vector)
    let mut values: Vec<(f64, Vec<usize>, Vec<Complex64>)> = Vec::new();
    for (rows, cols) in cs.blocks() {
        let index: BTreeMap<WaveVector, usize> = cols.iter().enumerate().map(|(j, &c)| (cs.columns[c], j)).collect();
        let height = rows.len().max(cols.len());
        let mut a = DMatrix::<Complex64>::zeros(height, cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (m, c) in &cs.rows[r].entries {
                a[(i, index[m])] = c.to_c64();
            }
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
        for (s, sigma) in svd.singular_values.iter().enumerate() {
            let v: Vec<Complex64> = (0..cols.len()).map(|j| v_t[(s, j)].conj()).collect();
            values.push((*sigma, cols.clone(), v));
        }
    }
    values.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sigma_max = values[0].0;
    let threshold = rel_tol * sigma_max;
    let dimension = values.iter().filter(|v| v.0 < threshold || sigma_max == 0.0).count();
    let retained = values.len() - dimension;
    let gap_ratio = match (retained, dimension) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        _ if values[retained].0 == 0.0 => f64::INFINITY,
        _ => values[retained - 1].0 / values[retained].0,
    };
    let null_vectors = values[retained..]
        .iter()
        .rev()
        .map(|(_, cols, v)| {
            let mut full = vec![Complex64::new(0.0, 0.0); cs.columns.len()];
            for (j, &c) in cols.iter().enumerate() {
                full[c] = v[j];
            }
            full
        })
        .collect();
    Ok(NullspaceResult {
        dimension,
        spectrum: values.iter().map(|v| v.0).collect(),
        gap_ratio,
        null_vectors,
        columns: cs.columns.clone(),
    })
}

/// Angle between two complex directions, insensitive to a common phase.
pub fn complex_angle(u: &[Complex64], v: &[Complex64]) -> f64 {
    let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let inner: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() / (nu * nu);
    let residual: f64 = u.iter().zip(v).map(|(a, b)| (b - a * inner).norm_sqr()).sum::<f64>().sqrt();
    residual.atan2((inner * nu).norm())
}

/// Fourier coefficients of `e^{−βH}` by trapezoidal quadrature on a
/// `samples × samples` grid, restricted to the given modes.
pub fn boltzmann_coefficients(h: &Fourier<Complex64>, beta: f64, modes: &[WaveVector], samples: usize) -> Vec<Complex64> {
    let step = 2.0 * PI / samples as f64;
    let grid: Vec<((f64, f64), Complex64)> = (0..samples)
        .flat_map(|a| (0..samples).map(move |b| (a as f64 * step, b as f64 * step)))
        .map(|theta| (theta, (-beta * h.eval(theta)).exp()))
        .collect();
    let norm = (samples * samples) as f64;
    modes
        .iter()
        .map(|m| {
            grid.iter()
                .map(|((t1, t2), v)| v * Complex64::from_polar(1.0, -(m.0 as f64 * t1 + m.1 as f64 * t2)))
                .sum::<Complex64>()
                / norm
        })
        .collect()
}

/// Periods of α over the cycles θ₁ and θ₂, divided by 2π.
pub fn periods(x: &VectorFieldSpec<Fourier<GaussRat>>) -> (GaussRat, GaussRat) {
    let alpha = x.one_form();
    (alpha[0].coefficient((0, 0)), alpha[1].coefficient((0, 0)))
}

/// A global Hamiltonian `H` with `dH = α`, if the periods vanish.
pub fn torus_hamiltonian(x: &VectorFieldSpec<Fourier<GaussRat>>) -> Option<Fourier<GaussRat>> {
    let (a, b) = periods(x);
    if !Zero::is_zero(&a) || !Zero::is_zero(&b) {
        return None;
    }
    let alpha = x.one_form();
    let mut modes: BTreeMap<WaveVector, GaussRat> = BTreeMap::new();
    for (axis, component) in alpha.iter().enumerate() {
        for (k, c) in component.modes() {
            let wave = if axis == 0 { k.0 } else { k.1 };
            if wave != 0 {
                // ∂_axis e_k = i k_axis e_k
                modes.entry(*k).or_insert_with(|| c.clone() / (GaussRat::i() * GaussRat::from_int(wave as i64)));
            }
        }
    }
    Some(Fourier::from_modes(alpha[0].band(), modes))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryVerdict {
    /// A globally defined Hamiltonian `−(1/β) ln ρ` exists on the grid.
    Recovered,
    /// The density is not strictly positive, so no global Hamiltonian follows.
    NonPositiveDensity { worst: f64 },
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub verdict: RecoveryVerdict,
    /// `H(θ)` on the uniform grid, row-major in θ₁ then θ₂ (empty on failure).
    pub samples: Vec<f64>,
    pub grid: usize,
}

/// `H = −(1/β) ln ρ` on a `grid × grid` sampling, after fixing the overall
/// phase of ρ so that its mean is positive.
pub fn recover_hamiltonian(density: &Fourier<Complex64>, beta: f64, grid: usize) -> KmsResult<Recovery> {
    if beta == 0.0 {
        return Err(KmsError::Precondition("β = 0 carries no Hamiltonian information".into()));
    }
    let mean = density.coefficient((0, 0));
    if mean.norm() == 0.0 {
        return Ok(Recovery { verdict: RecoveryVerdict::NonPositiveDensity { worst: 0.0 }, samples: vec![], grid });
    }
    let phase = mean.conj() / mean.norm();
    let values: Vec<Complex64> = density.sample_grid(grid).into_iter().map(|v| v * phase).collect();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let worst = values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    let imag = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if worst <= 0.0 || imag > 1e-8 * scale {
        return Ok(Recovery { verdict: RecoveryVerdict::NonPositiveDensity { worst }, samples: vec![], grid });
    }
    let samples = values.iter().map(|v| -v.re.ln() / beta).collect();
    Ok(Recovery { verdict: RecoveryVerdict::Recovered, samples, grid })
}

/// `sup |a − b − c|` minimized over the constant `c` (midrange shift).
pub fn sup_distance_mod_constant(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn translation() -> VectorFieldSpec<Fourier<GaussRat>> {
        VectorFieldSpec::closed_one_form(vec![Fourier::zero(1), Fourier::constant(1, GaussRat::one())]).unwrap()
    }

    #[test]
    fn bracket_row_at_zero_temperature() {
        let cs = assemble_constraints(2, 4, &rational(0, 1), &translation()).unwrap();
        let row = cs.rows.iter().find(|r| r.pair == ((0, 1), (1, 0))).unwrap();
        // {e_k, e_l} = −(k₁l₂ − k₂l₁) e_{k+l} = e_{(1,1)}, seen by density mode −(1,1)
        assert_eq!(row.entries.len(), 1);
        assert_eq!(row.entries[&(-1, -1)], GaussRat::one());
    }

    #[test]
    fn transport_row_for_conjugate_pair() {
        let cs = assemble_constraints(2, 4, &rational(1, 1), &translation()).unwrap();
        let row = cs.rows.iter().find(|r| r.pair == ((-1, 0), (1, 0))).unwrap();
        // f = e^{−iθ₁}: L_X f = −i f, so h = −β g(−i f) = iβ at mode 0
        assert_eq!(row.entries[&(0, 0)], GaussRat::i());
    }

    #[test]
    fn dimensions_for_the_translation_field() {
        let at = |beta| nullspace_dim(&assemble_constraints(2, 4, &beta, &translation()).unwrap(), 1e-8).unwrap();
        assert_eq!(at(rational(0, 1)).dimension, 1);
        assert_eq!(at(rational(1, 1)).dimension, 0);
    }

    #[test]
    fn cutoff_invariant_is_enforced() {
        assert!(assemble_constraints(2, 3, &rational(1, 1), &translation()).is_err());
        let cs = assemble_constraints(2, 4, &rational(1, 1), &translation()).unwrap();
        assert_eq!(cs.dropped_entries, 0);
        // only k = l reaches the corner, and such pairs are excluded
        assert!(!cs.columns.contains(&(4, 4)));
    }

    #[test]
    fn recovery_verdicts() {
        let uniform = Fourier::constant(2, Complex64::new(3.0, 0.0));
        let rec = recover_hamiltonian(&uniform, 1.0, 8).unwrap();
        assert_eq!(rec.verdict, RecoveryVerdict::Recovered);
        assert!(sup_distance_mod_constant(&rec.samples, &vec![0.0; 64]) < 1e-14);
        let crossing = Fourier::<Complex64>::cos(2, (1, 0));
        let rec = recover_hamiltonian(&crossing, 1.0, 8).unwrap();
        assert!(matches!(rec.verdict, RecoveryVerdict::NonPositiveDensity { .. }));
    }

    #[test]
    fn primitives_on_the_torus() {
        assert!(torus_hamiltonian(&translation()).is_none());
        let h = Fourier::cos(3, (1, 2)).add(&Fourier::sin(3, (0, 1)));
        let x = VectorFieldSpec::hamiltonian(h.clone());
        assert_eq!(torus_hamiltonian(&x).unwrap(), h);
    }

    #[test]
    fn angle_ignores_phase() {
        let u = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let v: Vec<Complex64> = u.iter().map(|z: &Complex64| z * Complex64::from_polar(3.0, 0.4)).collect();
        assert!(complex_angle(&u, &v) < 1e-15);
        let w = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!((complex_angle(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], &w) - PI / 2.0).abs() < 1e-15);
    }
}
