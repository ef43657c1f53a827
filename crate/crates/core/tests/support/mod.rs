//! Finite-difference gradient checks shared by the gradient tests and the acceptance run.
#![allow(dead_code)]

use privgan_lab::numkit::{bce_loss, categorical_ce_loss, Activation, Matrix, MlpModel, Rng};

const H: f64 = 1e-5;
pub const TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug)]
pub enum Head {
    SigmoidBce,
    SoftmaxCe,
    TanhSquared,
    LinearSquared,
    LeakySquared,
}

impl Head {
    pub fn activation(self) -> Activation {
        match self {
            Head::SigmoidBce => Activation::Sigmoid,
            Head::SoftmaxCe => Activation::Softmax,
            Head::TanhSquared => Activation::Tanh,
            Head::LinearSquared => Activation::Linear,
            Head::LeakySquared => Activation::leaky(),
        }
    }
}

pub struct Case {
    model: MlpModel,
    x: Matrix,
    head: Head,
    targets: Matrix,
    classes: Vec<usize>,
}

impl Case {
    fn new(seed: u64, hidden: Activation, head: Head, widths: &[usize], batch: usize) -> Self {
        let mut rng = Rng::new(seed);
        let out = *widths.last().unwrap();
        let mut acts = vec![hidden; widths.len() - 2];
        acts.push(head.activation());
        let model = MlpModel::new(widths, &acts, &mut rng).unwrap();
        let x = Matrix::from_vec(batch, widths[0], (0..batch * widths[0]).map(|_| rng.normal()).collect()).unwrap();
        let targets = Matrix::from_vec(batch, out, (0..batch * out).map(|_| rng.uniform()).collect()).unwrap();
        let classes = (0..batch).map(|_| rng.below(out)).collect();
        Self {
            model,
            x,
            head,
            targets,
            classes,
        }
    }

    fn loss_of(&self, model: &MlpModel, x: &Matrix) -> f64 {
        let y = model.predict(x).unwrap();
        match self.head {
            Head::SigmoidBce => bce_loss(&y, &self.targets).unwrap().value,
            Head::SoftmaxCe => categorical_ce_loss(&y, &self.classes).unwrap().value,
            _ => 0.5 * y.sub(&self.targets).unwrap().data().iter().map(|v| v * v).sum::<f64>(),
        }
    }

    /// Analytic gradients as one flat vector: weights, biases, then input.
    fn analytic(&self, via_logits: bool) -> Vec<f64> {
        let (y, cache) = self.model.forward(&self.x).unwrap();
        let g = match self.head {
            Head::SigmoidBce | Head::SoftmaxCe => {
                let l = match self.head {
                    Head::SigmoidBce => bce_loss(&y, &self.targets).unwrap(),
                    _ => categorical_ce_loss(&y, &self.classes).unwrap(),
                };
                if via_logits {
                    self.model.backward_logits(&cache, &l.grad_logits).unwrap()
                } else {
                    self.model.backward(&cache, &l.grad).unwrap()
                }
            }
            _ => self.model.backward(&cache, &y.sub(&self.targets).unwrap()).unwrap(),
        };
        let mut flat = Vec::new();
        for w in g.weights.iter().chain(&g.biases) {
            flat.extend_from_slice(w.data());
        }
        flat.extend_from_slice(g.input.data());
        flat
    }

    fn numeric(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        let n = self.model.num_layers();
        for part in 0..2 {
            for k in 0..n {
                let len = if part == 0 {
                    self.model.weights()[k].data().len()
                } else {
                    self.model.biases()[k].data().len()
                };
                for i in 0..len {
                    let eval = |delta: f64| {
                        let mut m = self.model.clone();
                        let (w, b) = m.params_mut();
                        let t = if part == 0 { &mut w[k] } else { &mut b[k] };
                        t.data_mut()[i] += delta;
                        self.loss_of(&m, &self.x)
                    };
                    flat.push((eval(H) - eval(-H)) / (2.0 * H));
                }
            }
        }
        for i in 0..self.x.data().len() {
            let eval = |delta: f64| {
                let mut x = self.x.clone();
                x.data_mut()[i] += delta;
                self.loss_of(&self.model, &x)
            };
            flat.push((eval(H) - eval(-H)) / (2.0 * H));
        }
        flat
    }
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

/// Largest relative error over the output-gradient and (for sigmoid and
/// softmax heads) logit-gradient routes.
pub fn rel_error_of(seed: u64, hidden: Activation, head: Head, widths: &[usize], batch: usize) -> f64 {
    let case = Case::new(seed, hidden, head, widths, batch);
    let numeric = case.numeric();
    let mut err = rel_error(&case.analytic(false), &numeric);
    if matches!(head, Head::SigmoidBce | Head::SoftmaxCe) {
        err = err.max(rel_error(&case.analytic(true), &numeric));
    }
    err
}

pub fn check(seed: u64, hidden: Activation, head: Head, widths: Vec<usize>, batch: usize) {
    let err = rel_error_of(seed, hidden, head, &widths, batch);
    assert!(err < TOL, "{head:?}: rel err {err:e} widths {widths:?}");
}

pub fn hidden_activations() -> [Activation; 3] {
    [Activation::leaky(), Activation::Tanh, Activation::Linear]
}
pub const HEADS: [Head; 5] = [
    Head::SigmoidBce,
    Head::SoftmaxCe,
    Head::TanhSquared,
    Head::LinearSquared,
    Head::LeakySquared,
];

/// Random layer widths and batch size for one check, drawn from `rng`.
pub fn random_shape(rng: &mut Rng, head: Head) -> (Vec<usize>, usize) {
    let mut w = vec![1 + rng.below(4)];
    for _ in 0..rng.below(3) {
        w.push(1 + rng.below(5));
    }
    let min_out = if matches!(head, Head::SoftmaxCe) { 2 } else { 1 };
    w.push(min_out + rng.below(4 - min_out));
    (w, 1 + rng.below(4))
}
