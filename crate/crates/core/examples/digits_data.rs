//! Loads the bundled digits, splits off a training fraction, partitions it
//! and projects everything onto the leading principal components.

use privgan_lab::data::{partition, pca_fit, pca_project, split, Dataset};

fn main() -> privgan_lab::Result<()> {
    let digits = Dataset::digits();
    println!(
        "{}: {} rows x {} features, {} classes",
        digits.name(),
        digits.len(),
        digits.dim(),
        digits.num_classes()
    );

    let plan = split(digits.len(), 0.1, 0)?;
    println!(
        "train {} / holdout {}",
        plan.train_indices.len(),
        plan.holdout_indices.len()
    );

    let parts = partition(&plan.train_indices, 2, 0, 32)?;
    println!("2 parts of {} rows, {} dropped", parts.part_size(), parts.dropped.len());

    let holdout = digits.features().select_rows(&plan.holdout_indices);
    let basis = pca_fit(&holdout, 40)?;
    let projected = pca_project(&basis, digits.features())?;
    println!("projected shape {:?}", projected.shape());
    Ok(())
}
