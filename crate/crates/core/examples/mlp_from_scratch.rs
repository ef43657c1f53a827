//! Fits a small MLP to XOR with the bundled forward/backward pass and Adam.

use privgan_lab::numkit::{
    adam_step, bce_loss, sample_noise, Activation, AdamConfig, AdamState, Matrix, MlpModel, Rng,
};

fn main() -> privgan_lab::Result<()> {
    let mut rng = Rng::new(0);
    let z = sample_noise(&mut rng, 2, 4)?;
    println!("two noise rows: {:?} / {:?}", z.row(0), z.row(1));

    let x = Matrix::from_rows(&[[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])?;
    let y = Matrix::from_vec(4, 1, vec![0.0, 1.0, 1.0, 0.0])?;
    let mut model = MlpModel::new(&[2, 8, 1], &[Activation::Tanh, Activation::Sigmoid], &mut rng)?;
    let mut opt = AdamState::for_model(
        AdamConfig {
            lr: 0.05,
            beta1: 0.9,
            ..AdamConfig::default()
        },
        &model,
    )?;
    for step in 0..=500 {
        let (pred, cache) = model.forward(&x)?;
        let loss = bce_loss(&pred, &y)?;
        if step % 100 == 0 {
            println!("step {step:>3}: loss {:.5}", loss.value);
        }
        let grads = model.backward_logits(&cache, &loss.grad_logits)?;
        adam_step(&mut model, &grads, &mut opt)?;
    }
    let pred = model.predict(&x)?;
    for (row, p) in x.iter_rows().zip(pred.data()) {
        println!("{row:?} -> {p:.3}");
    }
    Ok(())
}
