use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Tanh,
    Linear,
}

/// Fully connected network with `tanh` hidden activations.
///
/// All weights live in one flat vector. Layer `l` stores its `out x in` weight
/// matrix column-major followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: OutputActivation,
    params: Vec<f64>,
}

/// Post-activation outputs of every layer for a batch (one sample per column).
#[derive(Debug, Clone)]
pub struct Trace {
    acts: Vec<DMatrix<f64>>,
}

impl Trace {
    pub fn output(&self) -> &DMatrix<f64> {
        self.acts.last().expect("trace holds at least the input")
    }
}

impl Mlp {
    /// All-zero network with layer widths `sizes` (input first, output last).
    pub fn zeros(sizes: &[usize], output: OutputActivation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer sizes {sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        Ok(Mlp { sizes: sizes.to_vec(), output, params: vec![0.0; n] })
    }

    /// Orthogonal weights (scaled by `hidden_gain`, `final_gain` for the last layer), zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(
        sizes: &[usize],
        output: OutputActivation,
        hidden_gain: f64,
        final_gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut mlp = Mlp::zeros(sizes, output)?;
        let layers = mlp.num_layers();
        for l in 0..layers {
            let (rows, cols) = (mlp.sizes[l + 1], mlp.sizes[l]);
            let gain = if l + 1 == layers { final_gain } else { hidden_gain };
            let w = orthogonal_matrix(rows, cols, rng) * gain;
            mlp.weights_mut(l).copy_from(&w);
        }
        Ok(mlp)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Validates a deserialized network.
    pub fn check(&self) -> Result<()> {
        let expected: usize = self.sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        if self.sizes.len() < 2 || self.params.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: self.params.len() });
        }
        Ok(())
    }

    fn offset(&self, layer: usize) -> usize {
        self.sizes.windows(2).take(layer).map(|w| w[1] * w[0] + w[1]).sum()
    }

    fn weights(&self, l: usize) -> DMatrixView<'_, f64> {
        let (o, i, off) = (self.sizes[l + 1], self.sizes[l], self.offset(l));
        DMatrixView::from_slice(&self.params[off..off + o * i], o, i)
    }

    fn weights_mut(&mut self, l: usize) -> DMatrixViewMut<'_, f64> {
        let (o, i, off) = (self.sizes[l + 1], self.sizes[l], self.offset(l));
        DMatrixViewMut::from_slice(&mut self.params[off..off + o * i], o, i)
    }

    fn bias(&self, l: usize) -> &[f64] {
        let (o, i, off) = (self.sizes[l + 1], self.sizes[l], self.offset(l));
        &self.params[off + o * i..off + o * i + o]
    }

    fn activation(&self, l: usize) -> bool {
        l + 1 < self.num_layers() || self.output == OutputActivation::Tanh
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.len() });
        }
        let mut cur = x.to_vec();
        for l in 0..self.num_layers() {
            let (o, i) = (self.sizes[l + 1], self.sizes[l]);
            let off = self.offset(l);
            let w = &self.params[off..off + o * i];
            let mut next = self.bias(l).to_vec();
            for (c, &xc) in cur.iter().enumerate() {
                let col = &w[c * o..(c + 1) * o];
                for (n, &wv) in next.iter_mut().zip(col) {
                    *n += wv * xc;
                }
            }
            if self.activation(l) {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Batched forward pass; `x` is `input_dim x batch`.
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> Result<Trace> {
        if x.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.nrows() });
        }
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.clone());
        for l in 0..self.num_layers() {
            let prev = acts.last().unwrap();
            let mut z = DMatrix::zeros(self.sizes[l + 1], prev.ncols());
            z.gemm(1.0, &self.weights(l), prev, 0.0);
            let b = self.bias(l);
            for mut col in z.column_iter_mut() {
                col.iter_mut().zip(b).for_each(|(v, bb)| *v += bb);
            }
            if self.activation(l) {
                z.apply(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        Ok(Trace { acts })
    }

    /// Accumulates `dL/dparams` into `grad` given `dL/doutput` for the traced batch.
    pub fn backward(&self, trace: &Trace, d_out: &DMatrix<f64>, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let mut delta = d_out.clone();
        for l in (0..self.num_layers()).rev() {
            let out = &trace.acts[l + 1];
            if self.activation(l) {
                delta.zip_apply(out, |d, a| *d *= 1.0 - a * a);
            }
            let input = &trace.acts[l];
            let (o, i, off) = (self.sizes[l + 1], self.sizes[l], self.offset(l));
            {
                let mut gw = DMatrixViewMut::from_slice(&mut grad[off..off + o * i], o, i);
                gw.gemm(1.0, &delta, &input.transpose(), 1.0);
            }
            for (g, row_sum) in grad[off + o * i..off + o * i + o].iter_mut().zip(delta.row_iter().map(|r| r.sum())) {
                *g += row_sum;
            }
            if l > 0 {
                let mut prev = DMatrix::zeros(i, delta.ncols());
                prev.gemm(1.0, &self.weights(l).transpose(), &delta, 0.0);
                delta = prev;
            }
        }
    }
}

/// `rows x cols` matrix with orthonormal rows or columns, from the QR of a Gaussian matrix.
fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let (r, c) = if rows < cols { (cols, rows) } else { (rows, cols) };
    let g = DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    // sign fix so the distribution is uniform
    let rd = qr.r();
    for j in 0..c {
        if rd[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if rows < cols {
        q.transpose()
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedTree;

    #[test]
    fn zero_network_outputs_zero() {
        let m = Mlp::zeros(&[3, 8, 4, 1], OutputActivation::Tanh).unwrap();
        assert_eq!(m.forward(&[0.3, -1.0, 2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn identity_linear_layer() {
        let mut m = Mlp::zeros(&[3, 3], OutputActivation::Linear).unwrap();
        m.weights_mut(0).fill_with_identity();
        assert_eq!(m.forward(&[0.5, -2.0, 7.0]).unwrap(), vec![0.5, -2.0, 7.0]);
    }

    #[test]
    fn dimension_checks() {
        let m = Mlp::zeros(&[3, 4, 1], OutputActivation::Linear).unwrap();
        assert!(m.forward(&[1.0]).is_err());
        assert!(m.forward_batch(&DMatrix::zeros(2, 5)).is_err());
        assert!(Mlp::zeros(&[3], OutputActivation::Linear).is_err());
    }

    #[test]
    fn orthogonal_init_is_orthogonal() {
        let mut rng = SeedTree::new(1).rng();
        let m = Mlp::orthogonal(&[3, 16, 8, 1], OutputActivation::Tanh, 1.0, 1.0, &mut rng).unwrap();
        let w = m.weights(0).into_owned(); // 16 x 3, orthonormal columns
        let g = w.transpose() * &w;
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        let w = m.weights(1).into_owned(); // 8 x 16, orthonormal rows
        let g = &w * w.transpose();
        assert!((g - DMatrix::identity(8, 8)).abs().max() < 1e-12);
    }

    #[test]
    fn batch_matches_single() {
        let mut rng = SeedTree::new(2).rng();
        let m = Mlp::orthogonal(&[3, 12, 6, 2], OutputActivation::Linear, 1.4, 0.7, &mut rng).unwrap();
        let x = DMatrix::from_fn(3, 5, |i, j| (i as f64 - j as f64 * 0.3).sin());
        let tr = m.forward_batch(&x).unwrap();
        for j in 0..5 {
            let single = m.forward(x.column(j).as_slice()).unwrap();
            for k in 0..2 {
                assert!((single[k] - tr.output()[(k, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = SeedTree::new(4).rng();
        for output in [OutputActivation::Tanh, OutputActivation::Linear] {
            let mut m = Mlp::orthogonal(&[3, 7, 5, 2], output, 1.2, 0.9, &mut rng).unwrap();
            for (i, p) in m.params_mut().iter_mut().enumerate() {
                *p += 0.05 * ((i * 7 % 11) as f64 - 5.0) / 5.0;
            }
            let x = DMatrix::from_fn(3, 4, |i, j| ((i * 3 + j) as f64 * 0.7).cos());
            let target = DMatrix::from_fn(2, 4, |i, j| (i + j) as f64 * 0.1);
            // L = 0.5 * sum((y - target)^2)
            let loss = |m: &Mlp| 0.5 * (m.forward_batch(&x).unwrap().output() - &target).norm_squared();
            let tr = m.forward_batch(&x).unwrap();
            let mut grad = vec![0.0; m.params().len()];
            m.backward(&tr, &(tr.output() - &target), &mut grad);
            let h = 1e-6;
            for k in 0..grad.len() {
                let orig = m.params()[k];
                m.params_mut()[k] = orig + h;
                let lp = loss(&m);
                m.params_mut()[k] = orig - h;
                let lm = loss(&m);
                m.params_mut()[k] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let scale = fd.abs().max(grad[k].abs()).max(1e-6);
                assert!((fd - grad[k]).abs() / scale < 1e-5, "param {k}: fd {fd} bp {}", grad[k]);
            }
        }
    }
}
