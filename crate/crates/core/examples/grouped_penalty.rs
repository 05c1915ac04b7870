//! Loss, penalty and gradient of a grouped-L2 logistic model on a toy
//! problem.

use causalreg::model::{gradient, grouped_penalty, total_loss, BinaryMatrix, DesignMatrix, LabelVector};
use causalreg::{FeatureGroups, LinearModel, PenaltyConfig};

fn main() -> causalreg::Result<()> {
    // Features 0-1 are causal, 2 is spurious, 3-4 are remaining.
    let x = DesignMatrix::Binary(BinaryMatrix::from_rows(5, vec![vec![0, 2], vec![1, 3], vec![0, 4], vec![1, 2, 3]])?);
    let y = LabelVector::new(vec![1, 0, 1, 0])?;
    let groups = FeatureGroups::new(5, [0, 1], [2])?;
    let model = LinearModel::new(vec![0.8, -0.6, 1.5, 0.1, -0.2], 0.05);

    for cfg in [
        PenaltyConfig::zero(),
        PenaltyConfig::new(0.0, 100.0, 10.0)?,
        PenaltyConfig::uniform(1.0)?,
    ] {
        let g = gradient(&model, &x, &y, &groups, &cfg)?;
        println!(
            "λ = {cfg:<12} penalty {:>8.4}  loss {:>8.4}  ∂/∂w_spurious {:>8.4}",
            grouped_penalty(&model, &groups, &cfg)?,
            total_loss(&model, &x, &y, &groups, &cfg)?,
            g.weights[2],
        );
    }

    // Each group is normalised by its own size, so equal strengths match
    // standard mean-normalised L2 only when all features share one group.
    let uniform = PenaltyConfig::uniform(1.0)?;
    let one_group = FeatureGroups::all_remaining(5);
    println!(
        "uniform λ=1: three groups {:.4}, one group {:.4}",
        grouped_penalty(&model, &groups, &uniform)?,
        grouped_penalty(&model, &one_group, &uniform)?,
    );
    Ok(())
}
