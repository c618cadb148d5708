//! Metric arithmetic on reference numbers: the polygon area of six scores
//! and displayed accuracies for two confusion matrices.
//!
//!     cargo run --example reference_metrics

use puffin_sentiment::evalkit::{
    display_percent, display_points, pam, pam_polygon, ConfusionMatrix, EvalReport, MetricsReport, PAM_AXES,
};

fn main() -> puffin_sentiment::Result<()> {
    let values = [0.83, 0.76, 0.89, 0.82, 0.66, 0.80];
    println!("PAM = {:.5}", pam(values)?);
    for v in pam_polygon(values)? {
        println!("  {:<5} {:.2}  ({:+.4}, {:+.4})", v.axis, v.value, v.x, v.y);
    }
    assert_eq!(PAM_AXES.len(), values.len());

    // 643 items with 89 errors and 275 items with 47 errors.
    let train = MetricsReport::from_confusion(ConfusionMatrix::new(280, 44, 45, 274))?;
    let test = MetricsReport::from_confusion(ConfusionMatrix::new(113, 24, 23, 115))?;
    let report = EvalReport::new(train, test);
    println!(
        "\ntrain {}%  test {}%  gap {} points",
        display_percent(report.train.ca),
        display_percent(report.test.ca),
        display_points(report.gap_pp)
    );
    println!("exact: train {:.6}  test {:.6}", report.train.ca, report.test.ca);
    for (name, m) in [("train", &report.train), ("test", &report.test)] {
        println!("{name}: SE {:.4} SP {:.4} kappa {:.4} F {:.4}", m.se, m.sp, m.kappa, m.f);
    }
    Ok(())
}
