//! Low-rank adaptation of a frozen `d × k` matrix `W`:
//! `W' = W + (alpha / r) · B · A` with `A: r × k` and `B: d × r`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

fn check_rank(d: usize, k: usize, r: usize) -> Result<()> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!("matrix shape {d}x{k} is empty")));
    }
    if r == 0 || r > d.min(k) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} must be between 1 and min(d, k) = {}",
            d.min(k)
        )));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    a: Matrix,
    b: Matrix,
    alpha: f64,
}

impl LoraAdapter {
    /// Builds an adapter from explicit factors, checking their shapes agree.
    pub fn from_parts(a: Matrix, b: Matrix, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if a.nrows() != b.ncols() {
            return Err(Error::InvalidArgument(format!(
                "A has {} rows but B has {} columns",
                a.nrows(),
                b.ncols()
            )));
        }
        check_rank(b.nrows(), a.ncols(), a.nrows())?;
        Ok(Self { a, b, alpha })
    }

    pub fn rank(&self) -> usize {
        self.a.nrows()
    }

    /// Output dimension of the adapted matrix.
    pub fn d(&self) -> usize {
        self.b.nrows()
    }

    /// Input dimension of the adapted matrix.
    pub fn k(&self) -> usize {
        self.a.ncols()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `alpha / r`
    pub fn scale(&self) -> f64 {
        self.alpha / self.rank() as f64
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// Applies a gradient step `A -= lr·dA`, `B -= lr·dB`.
    pub fn step(&mut self, grads: &LoraGrads, learning_rate: f64) {
        self.a -= &grads.da * learning_rate;
        self.b -= &grads.db * learning_rate;
    }

    /// The dense update `(alpha / r) · B · A`.
    pub fn delta(&self) -> Matrix {
        (&self.b * &self.a) * self.scale()
    }

    fn check_base(&self, w: &Matrix) -> Result<()> {
        if w.shape() != (self.d(), self.k()) {
            return Err(Error::InvalidArgument(format!(
                "base matrix is {}x{} but the adapter expects {}x{}",
                w.nrows(),
                w.ncols(),
                self.d(),
                self.k()
            )));
        }
        Ok(())
    }
}

/// `A` uniform on `[-1/√k, 1/√k]` from a seeded ChaCha8 stream, `B = 0`.
pub fn lora_init(d: usize, k: usize, r: usize, alpha: f64, seed: u64) -> Result<LoraAdapter> {
    check_rank(d, k, r)?;
    check_alpha(alpha)?;
    let bound = 1.0 / (k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::from_fn(r, k, |_, _| rng.random_range(-bound..=bound));
    Ok(LoraAdapter {
        a,
        b: Matrix::zeros(d, r),
        alpha,
    })
}

/// `W·x + (alpha/r)·B·(A·x)` without forming the dense update.
pub fn lora_forward(w: &Matrix, adapter: &LoraAdapter, x: &Vector) -> Result<Vector> {
    adapter.check_base(w)?;
    if x.len() != adapter.k() {
        return Err(Error::InvalidArgument(format!(
            "input has length {} but k = {}",
            x.len(),
            adapter.k()
        )));
    }
    let low = &adapter.a * x;
    Ok(w * x + (&adapter.b * low) * adapter.scale())
}

pub fn lora_merge(w: &Matrix, adapter: &LoraAdapter) -> Result<Matrix> {
    adapter.check_base(w)?;
    Ok(w + adapter.delta())
}

/// Gradients of `upstream · lora_forward(W, adapter, x)` with respect to the
/// adapter factors. `W` is frozen and gets none.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraGrads {
    pub da: Matrix,
    pub db: Matrix,
}

pub fn lora_grads(w: &Matrix, adapter: &LoraAdapter, x: &Vector, upstream: &Vector) -> Result<LoraGrads> {
    adapter.check_base(w)?;
    if x.len() != adapter.k() || upstream.len() != adapter.d() {
        return Err(Error::InvalidArgument(format!(
            "x has length {} (want {}), upstream has length {} (want {})",
            x.len(),
            adapter.k(),
            upstream.len(),
            adapter.d()
        )));
    }
    let s = adapter.scale();
    let ax = &adapter.a * x;
    let bt_up = adapter.b.transpose() * upstream;
    Ok(LoraGrads {
        da: (bt_up * x.transpose()) * s,
        db: (upstream * ax.transpose()) * s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub lora_params: usize,
    pub full_params: usize,
    pub ratio: f64,
}

/// Trainable parameters of a rank-`r` adapter against the full matrix.
pub fn lora_param_stats(d: usize, k: usize, r: usize) -> Result<ParamStats> {
    check_rank(d, k, r)?;
    let lora_params = r * (d + k);
    let full_params = d * k;
    Ok(ParamStats {
        lora_params,
        full_params,
        ratio: lora_params as f64 / full_params as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes_and_bounds() {
        let ad = lora_init(8, 8, 2, 4.0, 7).unwrap();
        assert_eq!(ad.b(), &Matrix::zeros(8, 2));
        assert_eq!(ad.a().shape(), (2, 8));
        let bound = 1.0 / 8f64.sqrt();
        assert!(ad.a().iter().all(|v| v.abs() <= bound));
        assert_eq!(ad.scale(), 2.0);
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(lora_init(6, 5, 3, 1.0, 42).unwrap(), lora_init(6, 5, 3, 1.0, 42).unwrap());
        assert_ne!(lora_init(6, 5, 3, 1.0, 42).unwrap(), lora_init(6, 5, 3, 1.0, 43).unwrap());
    }

    #[test]
    fn rejects_bad_rank_and_alpha() {
        assert!(lora_init(4, 4, 8, 1.0, 0).is_err());
        assert!(lora_init(4, 4, 0, 1.0, 0).is_err());
        assert!(lora_init(4, 4, 2, 0.0, 0).is_err());
        assert!(lora_init(4, 4, 2, f64::NAN, 0).is_err());
        assert!(lora_param_stats(4, 4, 5).is_err());
    }

    #[test]
    fn shape_mismatches() {
        let ad = lora_init(3, 4, 2, 1.0, 0).unwrap();
        let w = Matrix::zeros(3, 4);
        assert!(lora_forward(&Matrix::zeros(4, 3), &ad, &Vector::zeros(4)).is_err());
        assert!(lora_forward(&w, &ad, &Vector::zeros(3)).is_err());
        assert!(lora_merge(&Matrix::zeros(3, 3), &ad).is_err());
        assert!(lora_grads(&w, &ad, &Vector::zeros(4), &Vector::zeros(4)).is_err());
    }

    #[test]
    fn zero_b_gives_zero_da() {
        let ad = lora_init(5, 4, 2, 1.0, 3).unwrap();
        let w = Matrix::from_element(5, 4, 0.5);
        let x = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let up = Vector::from_vec(vec![1.0, 0.0, -1.0, 2.0, 0.25]);
        let g = lora_grads(&w, &ad, &x, &up).unwrap();
        assert!(g.da.iter().all(|&v| v == 0.0));
        assert!(g.db.iter().any(|&v| v != 0.0));
        let g0 = lora_grads(&w, &ad, &Vector::zeros(4), &up).unwrap();
        assert!(g0.da.iter().chain(g0.db.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn param_counts() {
        let s = lora_param_stats(64, 64, 4).unwrap();
        assert_eq!((s.lora_params, s.full_params, s.ratio), (512, 4096, 0.125));
        let s = lora_param_stats(16, 16, 16).unwrap();
        assert_eq!(s.ratio, 2.0 * 16.0 / 16.0);
        let s = lora_param_stats(4096, 4096, 8).unwrap();
        assert_eq!(s.ratio, 16.0 / 4096.0);
    }
}
