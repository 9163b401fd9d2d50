use super::{Result, Tensor, TensorError};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.99;
pub const ADAM_EPS: f64 = 1e-8;

/// Bias-corrected Adam over a fixed, ordered list of parameters.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    shapes: Vec<Vec<usize>>,
}

impl Adam {
    pub fn new(params: &[Tensor]) -> Self {
        Self {
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
            step: 0,
            first: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            shapes: params.iter().map(|p| p.shape().to_vec()).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to every parameter that has a gradient, then
    /// clears all gradients. Parameters without a gradient are left alone
    /// and their moments are not decayed.
    pub fn step(&mut self, params: &[Tensor], learning_rate: f64) -> Result<()> {
        if params.len() != self.shapes.len() {
            return Err(TensorError::Config(format!("optimizer tracks {} parameters, got {}", self.shapes.len(), params.len())));
        }
        for (p, s) in params.iter().zip(&self.shapes) {
            if p.shape() != s.as_slice() {
                return Err(TensorError::ShapeMismatch { op: "adam_step", left: s.clone(), right: p.shape().to_vec() });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (i, p) in params.iter().enumerate() {
            let Some(g) = p.grad() else { continue };
            let m = &mut self.first[i];
            let v = &mut self.second[i];
            let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
            p.update(|w| {
                for j in 0..w.len() {
                    m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                    v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                    let m_hat = m[j] / bc1;
                    let v_hat = v[j] / bc2;
                    w[j] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
                }
            });
            p.zero_grad();
        }
        Ok(())
    }
}
