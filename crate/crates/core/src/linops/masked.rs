use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::{CVector, Complex64, Error, RVector};

/// Masked, zero-padded DFT measurements.
///
/// For each mask `D^m` the operator multiplies the signal elementwise by
/// the mask, zero-pads every axis of length `K` to `2K - 1`, applies the
/// unnormalized forward DFT and multiplies by the global scale `s`. Outputs
/// of all masks are concatenated. Signals of rank 2 are stored column-major.
///
/// Because distinct frequencies of the padded DFT are orthogonal, `A^H A`
/// is diagonal with entries `s^2 * N * sum_m |D^m_k|^2`, where `N` is the
/// padded length per mask. Gram solves and the pseudo-inverse therefore cost
/// one adjoint plus a pointwise division.
#[derive(Clone)]
pub struct MaskedDftOperator {
    dims: Vec<usize>,
    padded: Vec<usize>,
    masks: Vec<CVector>,
    scale: f64,
    gram_diag: RVector,
    // signal index -> index in the padded grid
    embed: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for MaskedDftOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaskedDftOperator")
            .field("dims", &self.dims)
            .field("padded", &self.padded)
            .field("masks", &self.masks.len())
            .field("scale", &self.scale)
            .finish()
    }
}

impl MaskedDftOperator {
    /// One-dimensional operator of length `k` with `mask_count` masks: the
    /// first mask is all ones, the others sample each entry with rate 0.5.
    pub fn new_1d<R: Rng + ?Sized>(k: usize, mask_count: usize, rng: &mut R) -> Result<Self> {
        Self::random(vec![k], mask_count, rng)
    }

    /// Two-dimensional operator on a `side x side` image.
    pub fn new_2d<R: Rng + ?Sized>(side: usize, mask_count: usize, rng: &mut R) -> Result<Self> {
        Self::random(vec![side, side], mask_count, rng)
    }

    fn random<R: Rng + ?Sized>(dims: Vec<usize>, mask_count: usize, rng: &mut R) -> Result<Self> {
        if mask_count == 0 {
            return Err(Error::InvalidArgument("at least one mask is required".into()));
        }
        let len: usize = dims.iter().product();
        let mut masks = Vec::with_capacity(mask_count);
        masks.push(CVector::from_element(len, Complex64::new(1.0, 0.0)));
        for _ in 1..mask_count {
            masks.push(CVector::from_fn(len, |_, _| {
                if rng.random_bool(0.5) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }));
        }
        Self::from_masks(dims, masks, 1.0)
    }

    /// Builds the operator from explicit masks. `dims` has one entry for
    /// signals and two (rows, columns) for column-major images.
    pub fn from_masks(dims: Vec<usize>, masks: Vec<CVector>, scale: f64) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "masked DFT supports 1-D or 2-D non-empty signals, got dims {dims:?}"
            )));
        }
        if masks.is_empty() {
            return Err(Error::InvalidArgument("at least one mask is required".into()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        let len: usize = dims.iter().product();
        for mask in &masks {
            crate::error::check_len("mask length", len, mask.len())?;
        }
        let padded: Vec<usize> = dims.iter().map(|&d| 2 * d - 1).collect();
        let per_mask: usize = padded.iter().product();

        let mut gram_diag = RVector::zeros(len);
        for mask in &masks {
            for (g, d) in gram_diag.iter_mut().zip(mask.iter()) {
                *g += d.norm_sqr();
            }
        }
        gram_diag *= scale * scale * per_mask as f64;
        if gram_diag.iter().any(|&g| g <= 0.0) {
            return Err(Error::RankDeficient);
        }

        let embed = match dims.as_slice() {
            [_] => (0..len).collect(),
            [rows, cols] => (0..*cols)
                .flat_map(|j| (0..*rows).map(move |i| i + j * (2 * rows - 1)))
                .collect(),
            _ => unreachable!(),
        };

        let mut planner = FftPlanner::new();
        let forward = padded.iter().map(|&p| planner.plan_fft_forward(p)).collect();
        let inverse = padded.iter().map(|&p| planner.plan_fft_inverse(p)).collect();

        Ok(MaskedDftOperator {
            dims,
            padded,
            masks,
            scale,
            gram_diag,
            embed,
            forward,
            inverse,
        })
    }

    pub fn rows(&self) -> usize {
        self.masks.len() * self.padded_len()
    }

    pub fn cols(&self) -> usize {
        self.embed.len()
    }

    /// Signal dimensions (length, or rows and columns).
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Padded transform dimensions, `2K - 1` per axis.
    pub fn padded_dims(&self) -> &[usize] {
        &self.padded
    }

    /// Number of measurements per mask.
    pub fn padded_len(&self) -> usize {
        self.padded.iter().product()
    }

    pub fn masks(&self) -> &[CVector] {
        &self.masks
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Diagonal of `A^H A`.
    pub fn gram_diagonal(&self) -> &RVector {
        &self.gram_diag
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale *= factor;
        out.gram_diag *= factor * factor;
        out
    }

    pub(crate) fn apply_unchecked(&self, x: &CVector) -> CVector {
        let per_mask = self.padded_len();
        let mut out = CVector::zeros(self.rows());
        let mut scratch = self.scratch(&self.forward);
        let mut line = Vec::new();
        for (m, mask) in self.masks.iter().enumerate() {
            let buf = &mut out.as_mut_slice()[m * per_mask..(m + 1) * per_mask];
            for ((&p, xi), di) in self.embed.iter().zip(x.iter()).zip(mask.iter()) {
                buf[p] = xi * di * self.scale;
            }
            self.transform(buf, &self.forward, &mut line, &mut scratch);
        }
        out
    }

    pub(crate) fn adjoint_unchecked(&self, v: &CVector) -> CVector {
        let per_mask = self.padded_len();
        let mut out = CVector::zeros(self.cols());
        let mut buf = vec![Complex64::new(0.0, 0.0); per_mask];
        let mut scratch = self.scratch(&self.inverse);
        let mut line = Vec::new();
        for (m, mask) in self.masks.iter().enumerate() {
            buf.copy_from_slice(&v.as_slice()[m * per_mask..(m + 1) * per_mask]);
            self.transform(&mut buf, &self.inverse, &mut line, &mut scratch);
            for ((o, &p), di) in out.iter_mut().zip(self.embed.iter()).zip(mask.iter()) {
                *o += di.conj() * buf[p];
            }
        }
        out * Complex64::new(self.scale, 0.0)
    }

    pub(crate) fn gram_solve_unchecked(&self, v: &CVector) -> CVector {
        v.zip_map(&self.gram_diag, |vi, g| vi / g)
    }

    pub(crate) fn pinv_unchecked(&self, v: &CVector) -> CVector {
        self.gram_solve_unchecked(&self.adjoint_unchecked(v))
    }

    fn scratch(&self, plans: &[Arc<dyn Fft<f64>>]) -> Vec<Complex64> {
        let len = plans
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        vec![Complex64::new(0.0, 0.0); len]
    }

    // Separable transform of a column-major padded grid.
    fn transform(
        &self,
        buf: &mut [Complex64],
        plans: &[Arc<dyn Fft<f64>>],
        line: &mut Vec<Complex64>,
        scratch: &mut [Complex64],
    ) {
        match self.padded.as_slice() {
            [_] => plans[0].process_with_scratch(buf, scratch),
            [rows, cols] => {
                for column in buf.chunks_exact_mut(*rows) {
                    plans[0].process_with_scratch(column, scratch);
                }
                line.resize(*cols, Complex64::new(0.0, 0.0));
                for i in 0..*rows {
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = buf[i + j * rows];
                    }
                    plans[1].process_with_scratch(line, scratch);
                    for (j, l) in line.iter().enumerate() {
                        buf[i + j * rows] = *l;
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}
