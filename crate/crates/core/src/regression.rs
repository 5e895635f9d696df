//! Least-squares estimators of conditional expectations and of martingale
//! representation integrands on a path ensemble.
//!
//! Conditioning at slice `i` uses polynomials in `W(t_i)` (Markov basis).
//! Normal equations are accumulated over fixed path chunks and summed in
//! chunk order, so results do not depend on the worker count.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{validation, Error, Result};
use crate::grid::TimeGrid;
use crate::paths::PathEnsemble;

const CHUNK: usize = 2048;

/// Polynomial regression basis of total degree `degree` with ridge weight
/// `ridge` on every non-constant coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub degree: usize,
    pub ridge: f64,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            degree: 2,
            ridge: 1e-8,
        }
    }
}

impl BasisSpec {
    pub fn new(degree: usize, ridge: f64) -> Result<Self> {
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(validation(format!("ridge must be finite and >= 0, got {ridge}")));
        }
        Ok(Self { degree, ridge })
    }

    /// Number of basis functions, `C(dim + degree, degree)`.
    pub fn size(&self, dim: usize) -> usize {
        let mut n = 1usize;
        for k in 1..=self.degree {
            n = n * (dim + k) / k;
        }
        n
    }

    fn check_against(&self, ensemble: &PathEnsemble) -> Result<()> {
        let p = self.size(ensemble.dim());
        if p * 10 >= ensemble.paths() {
            return Err(validation(format!(
                "basis size {p} must be below paths/10 = {}",
                ensemble.paths() / 10
            )));
        }
        Ok(())
    }
}

/// Fitted conditional expectation at one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEstimate {
    pub values: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub slice: usize,
}

/// One backward step: `target ≈ a(W_j) + z(W_j)·ΔW_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationStep {
    /// `a(W_j)` per path, the conditional expectation of the target at `t_j`.
    pub conditional: Vec<f64>,
    /// `z(W_j)` per path, `paths * dim` values.
    pub z: Vec<f64>,
}

/// Exponent vectors of all monomials of total degree `<= degree`, constant
/// first, then by total degree.
fn monomials(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    fn extend(prefix: &mut Vec<u32>, dim: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            if remaining == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            extend(prefix, dim, remaining - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        extend(&mut Vec::with_capacity(dim), dim, total, &mut out);
    }
    out
}

fn chunked_sum<F>(paths: usize, len: usize, accumulate: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync,
{
    let chunks = paths.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len];
            accumulate(c * CHUNK..((c + 1) * CHUNK).min(paths), &mut acc);
            acc
        })
        .collect();
    let mut total = vec![0.0; len];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Pseudo-inverse of the ridge-regularised Gram matrix `XᵀX/M + λ·diag(0,1,..,1)`.
fn regularized_inverse(gram_upper: &[f64], width: usize, ridge: f64, slice: usize) -> Result<DMatrix<f64>> {
    let mut gram = DMatrix::<f64>::zeros(width, width);
    for a in 0..width {
        for b in a..width {
            let v = gram_upper[a * width + b];
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    for a in 1..width {
        gram[(a, a)] += ridge;
    }
    let svd = gram.clone().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if !(max > 0.0) || (ridge == 0.0 && min <= 1e-12 * max) {
        return Err(Error::SingularDesign { slice });
    }
    svd.pseudo_inverse(1e-14 * max)
        .map_err(|e| validation(format!("pseudo-inverse failed at slice {slice}: {e}")))
}

#[derive(Debug, Clone)]
struct SliceDesign {
    /// Conditional basis size at this slice (1 at `t_0`).
    width: usize,
    /// `paths * width` basis values, row per path.
    features: Vec<f64>,
    conditional_inverse: DMatrix<f64>,
    joint_inverse: Option<DMatrix<f64>>,
}

impl SliceDesign {
    fn build(
        ensemble: &PathEnsemble,
        exponents: &[Vec<u32>],
        basis: &BasisSpec,
        slice: usize,
        joint: bool,
    ) -> Result<Self> {
        let paths = ensemble.paths();
        let dim = ensemble.dim();
        // F_0 is trivial: only the constant survives.
        let exps = if slice == 0 { &exponents[..1] } else { exponents };
        let width = exps.len();
        let states = ensemble.slice_states(slice);
        let mut features = vec![0.0; paths * width];
        features
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(m, row)| {
                let w = &states[m * dim..(m + 1) * dim];
                for (slot, e) in row.iter_mut().zip(exps) {
                    *slot = e
                        .iter()
                        .zip(w)
                        .fold(1.0, |acc, (&p, &x)| acc * x.powi(p as i32));
                }
            });

        let norm = 1.0 / paths as f64;
        let gram = chunked_sum(paths, width * width, |range, acc| {
            for m in range {
                let row = &features[m * width..(m + 1) * width];
                for a in 0..width {
                    for b in a..width {
                        acc[a * width + b] += row[a] * row[b];
                    }
                }
            }
        });
        let gram: Vec<f64> = gram.into_iter().map(|v| v * norm).collect();
        let conditional_inverse = regularized_inverse(&gram, width, basis.ridge, slice)?;

        let joint_inverse = if joint {
            let jw = width * (1 + dim);
            let incs = ensemble.slice_increments(slice);
            let jgram = chunked_sum(paths, jw * jw, |range, acc| {
                let mut row = vec![0.0; jw];
                for m in range {
                    joint_row(&features[m * width..(m + 1) * width], &incs[m * dim..(m + 1) * dim], &mut row);
                    for a in 0..jw {
                        for b in a..jw {
                            acc[a * jw + b] += row[a] * row[b];
                        }
                    }
                }
            });
            let jgram: Vec<f64> = jgram.into_iter().map(|v| v * norm).collect();
            Some(regularized_inverse(&jgram, jw, basis.ridge, slice)?)
        } else {
            None
        };

        Ok(Self {
            width,
            features,
            conditional_inverse,
            joint_inverse,
        })
    }

    fn row(&self, m: usize) -> &[f64] {
        &self.features[m * self.width..(m + 1) * self.width]
    }
}

#[inline]
fn joint_row(phi: &[f64], dw: &[f64], row: &mut [f64]) {
    let p = phi.len();
    row[..p].copy_from_slice(phi);
    for (l, &d) in dw.iter().enumerate() {
        for (slot, &f) in row[p * (l + 1)..p * (l + 2)].iter_mut().zip(phi) {
            *slot = f * d;
        }
    }
}

fn check_targets(targets: &[f64], paths: usize) -> Result<()> {
    if targets.len() != paths {
        return Err(validation(format!(
            "targets have length {}, expected {paths}",
            targets.len()
        )));
    }
    if let Some(m) = targets.iter().position(|v| !v.is_finite()) {
        return Err(validation(format!("target for path {m} is not finite")));
    }
    Ok(())
}

/// Cached per-slice designs over a shared ensemble.
#[derive(Debug)]
pub struct Regressor {
    ensemble: Arc<PathEnsemble>,
    basis: BasisSpec,
    designs: Vec<SliceDesign>,
}

impl Regressor {
    pub fn new(ensemble: Arc<PathEnsemble>, basis: BasisSpec) -> Result<Self> {
        basis.check_against(&ensemble)?;
        let exps = monomials(ensemble.dim(), basis.degree);
        let steps = ensemble.steps();
        let designs = (0..=steps)
            .map(|i| SliceDesign::build(&ensemble, &exps, &basis, i, i < steps))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ensemble,
            basis,
            designs,
        })
    }

    pub fn ensemble(&self) -> &PathEnsemble {
        &self.ensemble
    }

    pub fn shared_ensemble(&self) -> Arc<PathEnsemble> {
        Arc::clone(&self.ensemble)
    }

    pub fn grid(&self) -> &TimeGrid {
        self.ensemble.grid()
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn paths(&self) -> usize {
        self.ensemble.paths()
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    fn design(&self, slice: usize) -> Result<&SliceDesign> {
        self.designs
            .get(slice)
            .ok_or_else(|| validation(format!("slice {slice} is outside 0..={}", self.ensemble.steps())))
    }

    /// Least-squares projection of `targets` onto polynomials in `W(t_slice)`.
    pub fn conditional(&self, targets: &[f64], slice: usize) -> Result<ConditionalEstimate> {
        check_targets(targets, self.paths())?;
        let design = self.design(slice)?;
        Ok(conditional_with(design, targets, slice))
    }

    /// Direct estimate of `E[target·ΔW_slice | W(t_slice)] / Δt`, the discrete
    /// integrand on `[t_slice, t_slice+1]`, as `paths * dim` values.
    ///
    /// The target is fitted jointly on `φ(W)` and `φ(W)·ΔW`; the `φ(W)` block
    /// absorbs the `F_{t_slice}`-measurable part of the target.
    pub fn martingale_coefficient(&self, targets: &[f64], slice: usize) -> Result<Vec<f64>> {
        Ok(self.representation_step(targets, slice)?.z)
    }

    /// Joint fit `target ≈ a(W_j) + z(W_j)·ΔW_j` at slice `j`.
    pub fn representation_step(&self, targets: &[f64], slice: usize) -> Result<RepresentationStep> {
        check_targets(targets, self.paths())?;
        let design = self.design(slice)?;
        let inverse = design.joint_inverse.as_ref().ok_or_else(|| {
            validation(format!(
                "martingale coefficient needs slice < {}, got {slice}",
                self.ensemble.steps()
            ))
        })?;
        Ok(joint_with(&self.ensemble, design, inverse, targets, slice))
    }

    /// Martingale integrands of a target that is a function of `W(t_k)`,
    /// `k = measurable_at`, on every slice `j` in `down_to..k`.
    ///
    /// Runs the backward chain `Ŷ_k = target`, `Ŷ_j = a_j` where
    /// `Ŷ_{j+1} ≈ a_j(W_j) + z_j(W_j)·ΔW_j`. Only valid for Markov targets;
    /// a path-dependent target would be projected onto `W(t_{j+1})` with bias.
    /// Returns `z_j` for `j = down_to..k`, in increasing `j`.
    pub fn markov_representation(
        &self,
        targets: &[f64],
        measurable_at: usize,
        down_to: usize,
    ) -> Result<Vec<Vec<f64>>> {
        check_targets(targets, self.paths())?;
        if measurable_at > self.ensemble.steps() || down_to > measurable_at {
            return Err(validation(format!(
                "invalid chain {measurable_at} -> {down_to} on {} steps",
                self.ensemble.steps()
            )));
        }
        let mut out = Vec::with_capacity(measurable_at - down_to);
        let mut current = targets.to_vec();
        for j in (down_to..measurable_at).rev() {
            let step = self.representation_step(&current, j)?;
            out.push(step.z);
            current = step.conditional;
        }
        out.reverse();
        Ok(out)
    }

    /// Worst slice RMSE of `E[W¹(T) | W(t_i)]` against `W¹(t_i)` on this
    /// ensemble and basis. The reference noise level for Monte Carlo
    /// tolerances.
    pub fn martingale_test_rmse(&self) -> Result<f64> {
        let steps = self.ensemble.steps();
        let dim = self.dim();
        let terminal: Vec<f64> = self
            .ensemble
            .slice_states(steps)
            .iter()
            .step_by(dim)
            .copied()
            .collect();
        let mut worst = 0.0f64;
        for i in 0..steps {
            let fit = self.conditional(&terminal, i)?;
            let states = self.ensemble.slice_states(i);
            let mse = fit
                .values
                .iter()
                .enumerate()
                .map(|(m, v)| (v - states[m * dim]).powi(2))
                .sum::<f64>()
                / self.paths() as f64;
            worst = worst.max(mse.sqrt());
        }
        Ok(worst)
    }
}

fn conditional_with(design: &SliceDesign, targets: &[f64], slice: usize) -> ConditionalEstimate {
    let paths = targets.len();
    let width = design.width;
    let rhs = chunked_sum(paths, width, |range, acc| {
        for m in range {
            let y = targets[m];
            for (a, f) in acc.iter_mut().zip(design.row(m)) {
                *a += f * y;
            }
        }
    });
    let rhs = nalgebra::DVector::from_iterator(width, rhs.into_iter().map(|v| v / paths as f64));
    let coef = &design.conditional_inverse * rhs;
    let coefficients: Vec<f64> = coef.iter().copied().collect();
    let mut values = vec![0.0; paths];
    values.par_iter_mut().enumerate().for_each(|(m, v)| {
        *v = design.row(m).iter().zip(&coefficients).map(|(f, c)| f * c).sum();
    });
    ConditionalEstimate {
        values,
        coefficients,
        slice,
    }
}

fn joint_with(
    ensemble: &PathEnsemble,
    design: &SliceDesign,
    inverse: &DMatrix<f64>,
    targets: &[f64],
    slice: usize,
) -> RepresentationStep {
    let paths = targets.len();
    let dim = ensemble.dim();
    let p = design.width;
    let jw = p * (1 + dim);
    let incs = ensemble.slice_increments(slice);
    let rhs = chunked_sum(paths, jw, |range, acc| {
        for m in range {
            let y = targets[m];
            let phi = design.row(m);
            for (a, f) in phi.iter().enumerate() {
                acc[a] += f * y;
            }
            for (l, d) in incs[m * dim..(m + 1) * dim].iter().enumerate() {
                let yd = y * d;
                for (a, f) in phi.iter().enumerate() {
                    acc[p * (l + 1) + a] += f * yd;
                }
            }
        }
    });
    let rhs = nalgebra::DVector::from_iterator(jw, rhs.into_iter().map(|v| v / paths as f64));
    let coef: Vec<f64> = (inverse * rhs).iter().copied().collect();

    let mut conditional = vec![0.0; paths];
    let mut z = vec![0.0; paths * dim];
    conditional
        .par_iter_mut()
        .zip(z.par_chunks_mut(dim))
        .enumerate()
        .for_each(|(m, (a, zm))| {
            let phi = design.row(m);
            *a = phi.iter().zip(&coef[..p]).map(|(f, c)| f * c).sum();
            for (l, slot) in zm.iter_mut().enumerate() {
                *slot = phi
                    .iter()
                    .zip(&coef[p * (l + 1)..p * (l + 2)])
                    .map(|(f, c)| f * c)
                    .sum();
            }
        });
    RepresentationStep { conditional, z }
}

fn one_off(ensemble: &PathEnsemble, basis: &BasisSpec, slice: usize, joint: bool) -> Result<SliceDesign> {
    basis.check_against(ensemble)?;
    if slice > ensemble.steps() || (joint && slice == ensemble.steps()) {
        return Err(validation(format!("slice {slice} out of range")));
    }
    SliceDesign::build(ensemble, &monomials(ensemble.dim(), basis.degree), basis, slice, joint)
}

/// Uncached [`Regressor::conditional`] for a single slice.
pub fn regress_conditional(
    targets: &[f64],
    ensemble: &PathEnsemble,
    slice: usize,
    basis: &BasisSpec,
) -> Result<ConditionalEstimate> {
    check_targets(targets, ensemble.paths())?;
    let design = one_off(ensemble, basis, slice, false)?;
    Ok(conditional_with(&design, targets, slice))
}

/// Uncached [`Regressor::martingale_coefficient`] for a single slice.
pub fn martingale_coefficient(
    targets: &[f64],
    ensemble: &PathEnsemble,
    slice: usize,
    basis: &BasisSpec,
) -> Result<Vec<f64>> {
    check_targets(targets, ensemble.paths())?;
    let design = one_off(ensemble, basis, slice, true)?;
    let inverse = design.joint_inverse.as_ref().expect("joint design requested");
    Ok(joint_with(ensemble, &design, inverse, targets, slice).z)
}
