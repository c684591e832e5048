//! Dimension of the real Lie algebra generated by `{iH_k}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{ensure_square, hermiticity_defect};
use crate::CMat;

#[derive(Debug, Clone, Serialize)]
pub struct LieClosureResult {
    pub dimension: usize,
    /// Orthonormal (in `Re tr(A†B)`) anti-Hermitian basis.
    #[serde(skip)]
    pub basis: Vec<CMat>,
    /// Commutator depth reached.
    pub generations: usize,
    pub tolerance: f64,
}

/// Real coordinates of a matrix, in which the Euclidean product is `Re tr(A†B)`.
fn coords(a: &CMat) -> Vec<f64> {
    a.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn from_coords(x: &[f64], n: usize) -> CMat {
    CMat::from_iterator(n, n, x.chunks(2).map(|p| Complex64::new(p[0], p[1])))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Residual of `x` against the orthonormal `basis` (two Gram–Schmidt passes).
fn residual(mut x: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &x);
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
        }
    }
    x
}

/// Lie closure of `{iH_k}` for Hermitian `H_k`. Generators are made
/// traceless first. New elements are commuted with the generators only,
/// since right-nested commutators of generators span the algebra.
pub fn lie_closure(generators: &[CMat], tol: f64, max_dim: usize) -> Result<LieClosureResult> {
    let first = generators
        .first()
        .ok_or_else(|| Error::InvalidArgument("no generators".into()))?;
    let n = ensure_square(first)?;
    let i = Complex64::new(0.0, 1.0);
    let mut gens = Vec::new();
    for (k, h) in generators.iter().enumerate() {
        if h.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "generator {k} has shape {:?}, expected ({n}, {n})",
                h.shape()
            )));
        }
        let d = hermiticity_defect(h);
        if d > 1e-10 {
            return Err(Error::NotHermitian(d));
        }
        let shift = h.trace() / Complex64::new(n as f64, 0.0);
        let mut a = h.clone();
        for j in 0..n {
            a[(j, j)] -= shift;
        }
        if a.norm() <= tol {
            return Err(Error::InvalidArgument(format!(
                "generator {k} vanishes after trace removal"
            )));
        }
        gens.push(a * i);
    }

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut frontier: Vec<CMat> = Vec::new();
    let admit = |m: &CMat, basis: &mut Vec<Vec<f64>>, frontier: &mut Vec<CMat>| -> Result<()> {
        let r = residual(coords(m), basis);
        let norm = dot(&r, &r).sqrt();
        if norm > tol * (1.0 + m.norm()) {
            if basis.len() == max_dim {
                return Err(Error::MaxDimensionExceeded(max_dim));
            }
            let unit: Vec<f64> = r.iter().map(|x| x / norm).collect();
            frontier.push(from_coords(&unit, n));
            basis.push(unit);
        }
        Ok(())
    };
    for g in &gens {
        admit(g, &mut basis, &mut frontier)?;
    }
    let mut generations = 0;
    while !frontier.is_empty() {
        generations += 1;
        let current = std::mem::take(&mut frontier);
        for x in &current {
            for g in &gens {
                let c = g * x - x * g;
                admit(&c, &mut basis, &mut frontier)?;
            }
        }
    }
    Ok(LieClosureResult {
        dimension: basis.len(),
        basis: basis.iter().map(|b| from_coords(b, n)).collect(),
        generations,
        tolerance: tol,
    })
}
