//! AUC by midranks, the ROC curve, and the CSV form written by `eval --roc`.

use gadcl::{auc, roc_points};

fn main() -> gadcl::Result<()> {
    let scores = [0.91, 0.85, 0.85, 0.60, 0.42, 0.42, 0.42, 0.10];
    let labels = [1, 1, 0, 1, 0, 0, 1, 0];
    let value = auc(&scores, &labels)?;
    let roc = roc_points(&scores, &labels)?;
    println!("auc = {value}");
    println!("trapezoid area = {}", roc.trapezoid_area());
    for (fpr, tpr) in &roc.points {
        println!("  fpr {fpr:.3}  tpr {tpr:.3}");
    }

    let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
    println!("auc of negated scores = {}", auc(&negated, &labels)?);

    let path = std::env::temp_dir().join("roc_example.csv");
    roc.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
