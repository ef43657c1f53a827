//! Trains a baseline GAN on a ring of Gaussians and prints its loss curve.

use privgan_lab::data::{make_mixture, ring_centers};
use privgan_lab::models::{generate, ArchSpec, GanConfig, GanTrainer, GeneratorPolicy};
use privgan_lab::numkit::Rng;

fn main() -> privgan_lab::Result<()> {
    let data = make_mixture(&mut Rng::new(1), 1000, &ring_centers(8, 0.8), 0.02)?;
    let arch = ArchSpec {
        latent_dim: 8,
        ..ArchSpec::new(2, &[64, 64], &[64, 64])
    };
    let config = GanConfig {
        epochs: 200,
        batch_size: 64,
        lr: 1e-3,
        ..GanConfig::default()
    };
    let mut trainer = GanTrainer::new(data.features(), &arch, &config)?;
    for _ in 0..config.epochs {
        let rec = trainer.run_epoch()?;
        if rec.epoch % 25 == 0 {
            println!(
                "epoch {:>3}: D {:.4}  G {:.4}",
                rec.epoch, rec.disc_loss[0], rec.gen_loss[0]
            );
        }
    }
    let (model, _) = trainer.finish();
    let samples = generate(&model, 5, &mut Rng::new(2), GeneratorPolicy::Single(0))?;
    for row in samples.iter_rows() {
        println!("sample ({:+.3}, {:+.3})", row[0], row[1]);
    }
    Ok(())
}
